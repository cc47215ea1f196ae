//! Dataset aggregation and Welch two-sample t-tests.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{compare_models, EtaResult, FitResult, Preference};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t_statistic: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub degrees_of_freedom: f64,
    /// Two-sided.
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

/// Two-sided Welch test. When both samples have zero variance the result
/// is conventional: `p = 1` for equal means, `p = 0` (with infinite `t`)
/// otherwise.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "need at least two values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSample("non-finite value in sample".into()));
    }
    let (mean_a, var_a) = mean_var(a);
    let (mean_b, var_b) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ea, eb) = (var_a / na, var_b / nb);
    let se2 = ea + eb;
    if se2 == 0.0 {
        let equal = mean_a == mean_b;
        let t = if equal { 0.0 } else { (mean_a - mean_b).signum() * f64::INFINITY };
        return Ok(WelchResult {
            t_statistic: t,
            degrees_of_freedom: na + nb - 2.0,
            p_value: if equal { 1.0 } else { 0.0 },
            mean_a,
            mean_b,
        });
    }
    let t = (mean_a - mean_b) / se2.sqrt();
    let dof = se2 * se2 / (ea * ea / (na - 1.0) + eb * eb / (nb - 1.0));
    Ok(WelchResult {
        t_statistic: t,
        degrees_of_freedom: dof,
        p_value: student_t_two_sided(t, dof),
        mean_a,
        mean_b,
    })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// `P(|T| >= |t|)` for Student's t with `dof` degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = dof / (dof + t * t);
    regularized_incomplete_beta(0.5 * dof, 0.5, x).clamp(0.0, 1.0)
}

/// `I_x(a, b)` by the Lentz continued fraction, using the symmetry
/// `I_x(a, b) = 1 - I_{1-x}(b, a)` where the fraction converges slowly.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation (g = 7, n = 9), accurate to about 1e-15.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentKind {
    Beta,
    Gamma,
    Eta,
}

impl fmt::Display for ExponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExponentKind::Beta => "beta",
            ExponentKind::Gamma => "gamma",
            ExponentKind::Eta => "eta",
        })
    }
}

/// Fits for one order; `None` marks a failed fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFits {
    pub order: u32,
    pub power: Option<FitResult>,
    pub log_power: Option<FitResult>,
}

impl OrderFits {
    pub fn preference(&self) -> Option<Preference> {
        match (&self.power, &self.log_power) {
            (Some(p), Some(lp)) => compare_models(p, lp).ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextResults {
    pub source_id: String,
    pub fits: Vec<OrderFits>,
    pub eta: Option<EtaResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSummary {
    pub kind: ExponentKind,
    /// `None` for eta, which does not depend on the order.
    pub order: Option<u32>,
    pub n_texts: usize,
    pub n_failed: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 when only one value is available.
    pub std_dev: f64,
    pub single_value: bool,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Converged values in source-id order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceCount {
    pub order: u32,
    /// Texts where the log-power fit has the strictly larger R^2.
    pub log_power_better: usize,
    pub compared: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub label: String,
    pub n_texts: usize,
    pub exponents: Vec<ExponentSummary>,
    pub preferences: Vec<PreferenceCount>,
}

impl DatasetSummary {
    pub fn exponent(&self, kind: ExponentKind, order: Option<u32>) -> Option<&ExponentSummary> {
        self.exponents.iter().find(|e| e.kind == kind && e.order == order)
    }
}

/// Aggregates per-text results. Failed fits and non-converged eta
/// estimates are counted but excluded from the statistics.
pub fn summarize_dataset(label: &str, results: &[TextResults]) -> Result<DatasetSummary> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no per-text results to summarize".into()));
    }
    let mut sorted: Vec<&TextResults> = results.iter().collect();
    sorted.sort_by(|a, b| a.source_id.cmp(&b.source_id));

    let mut orders: Vec<u32> = sorted.iter().flat_map(|r| r.fits.iter().map(|f| f.order)).collect();
    orders.sort_unstable();
    orders.dedup();

    let mut exponents = Vec::new();
    let mut preferences = Vec::new();
    for &order in &orders {
        let fits_for = |r: &&TextResults| r.fits.iter().find(|f| f.order == order).cloned();
        let per_text: Vec<Option<OrderFits>> = sorted.iter().map(fits_for).collect();
        let betas: Vec<Option<f64>> = per_text
            .iter()
            .map(|f| f.as_ref().and_then(|f| f.power.map(|p| p.exponent)))
            .collect();
        let gammas: Vec<Option<f64>> = per_text
            .iter()
            .map(|f| f.as_ref().and_then(|f| f.log_power.map(|p| p.exponent)))
            .collect();
        exponents.push(summarize_values(ExponentKind::Beta, Some(order), &betas));
        exponents.push(summarize_values(ExponentKind::Gamma, Some(order), &gammas));
        let prefs: Vec<Preference> = per_text.iter().flatten().filter_map(|f| f.preference()).collect();
        preferences.push(PreferenceCount {
            order,
            log_power_better: prefs.iter().filter(|&&p| p == Preference::LogPower).count(),
            compared: prefs.len(),
        });
    }
    if sorted.iter().any(|r| r.eta.is_some()) {
        let etas: Vec<Option<f64>> = sorted
            .iter()
            .map(|r| r.eta.filter(|e| e.converged).map(|e| e.eta))
            .collect();
        exponents.push(summarize_values(ExponentKind::Eta, None, &etas));
    }
    Ok(DatasetSummary {
        label: label.to_string(),
        n_texts: sorted.len(),
        exponents,
        preferences,
    })
}

fn summarize_values(kind: ExponentKind, order: Option<u32>, values: &[Option<f64>]) -> ExponentSummary {
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let n_failed = values.len() - ok.len();
    let mut sorted = ok.clone();
    sorted.sort_by(f64::total_cmp);
    let (mean, std_dev) = match ok.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (ok[0], 0.0),
        _ => {
            let (m, v) = mean_var(&ok);
            (m, v.sqrt())
        }
    };
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let whisker_low = sorted.iter().copied().find(|&v| v >= q1 - 1.5 * iqr).unwrap_or(f64::NAN);
    let whisker_high = sorted.iter().rev().copied().find(|&v| v <= q3 + 1.5 * iqr).unwrap_or(f64::NAN);
    ExponentSummary {
        kind,
        order,
        n_texts: values.len(),
        n_failed,
        mean,
        std_dev,
        single_value: ok.len() == 1,
        q1,
        median,
        q3,
        whisker_low,
        whisker_high,
        values: ok,
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            if i + 1 < n {
                sorted[i] + frac * (sorted[i + 1] - sorted[i])
            } else {
                sorted[n - 1]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::Model;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.5, 0.4, 0.45];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn hand_computed_case() {
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_abs_diff_eq!(r.t_statistic, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.degrees_of_freedom, 8.0, epsilon = 1e-12);
        // independent reference: statrs Student's t CDF
        let reference = 2.0 * StudentsT::new(0.0, 1.0, 8.0).unwrap().cdf(-1.0);
        assert_abs_diff_eq!(r.p_value, reference, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.346_593_507_087_4, epsilon = 1e-10);
    }

    #[test]
    fn t_tail_matches_statrs() {
        for &dof in &[1.0, 2.5, 8.0, 30.0, 197.3] {
            let dist = StudentsT::new(0.0, 1.0, dof).unwrap();
            for &t in &[0.1, 0.7, 1.0, 2.0, 4.0, 9.0, 25.0] {
                let ours = student_t_two_sided(t, dof);
                let theirs = 2.0 * dist.cdf(-t);
                assert!(
                    ((ours - theirs) / theirs).abs() < 1e-9,
                    "dof {dof} t {t}: {ours} vs {theirs}"
                );
            }
        }
    }

    #[test]
    fn ln_gamma_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-14);
    }

    #[test]
    fn separated_samples() {
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(3);
        let a: Vec<f64> = (0..100).map(|_| Normal::new(0.37, 0.03).unwrap().sample(&mut rng)).collect();
        let b: Vec<f64> = (0..100).map(|_| Normal::new(0.49, 0.02).unwrap().sample(&mut rng)).collect();
        let r = welch_t_test(&a, &b).unwrap();
        assert!(r.p_value < 1e-3);
        assert!(r.t_statistic < 0.0);
    }

    #[test]
    fn degenerate_conventions() {
        assert!(matches!(welch_t_test(&[1.0], &[1.0, 2.0]), Err(Error::DegenerateSample(_))));
        let same = welch_t_test(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!((same.t_statistic, same.p_value), (0.0, 1.0));
        let apart = welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert_eq!(apart.p_value, 0.0);
        assert_eq!(apart.t_statistic, f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn welch_symmetry(a in prop::collection::vec(-10.0f64..10.0, 2..30),
                          b in prop::collection::vec(-10.0f64..10.0, 2..30)) {
            prop_assume!(mean_var(&a).1 + mean_var(&b).1 > 1e-9);
            let ab = welch_t_test(&a, &b).unwrap();
            let ba = welch_t_test(&b, &a).unwrap();
            prop_assert_eq!(ab.t_statistic, -ba.t_statistic);
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }

        #[test]
        fn welch_scale_invariance(a in prop::collection::vec(-10.0f64..10.0, 2..30),
                                  b in prop::collection::vec(-10.0f64..10.0, 2..30),
                                  k in 0.01f64..100.0) {
            prop_assume!(mean_var(&a).1 > 1e-6 && mean_var(&b).1 > 1e-6);
            let r = welch_t_test(&a, &b).unwrap();
            let sa: Vec<f64> = a.iter().map(|x| x * k).collect();
            let sb: Vec<f64> = b.iter().map(|x| x * k).collect();
            let s = welch_t_test(&sa, &sb).unwrap();
            prop_assert!((r.t_statistic - s.t_statistic).abs() <= 1e-12 * r.t_statistic.abs().max(1.0));
            prop_assert!((r.p_value - s.p_value).abs() <= 1e-12);
        }
    }

    fn fit(model: Model, exponent: f64, r2: f64) -> FitResult {
        FitResult {
            model,
            exponent,
            scale: 1.0,
            r_squared: r2,
            initial_r_squared: r2,
            fit_range: (2, 40),
            n_points: 39,
        }
    }

    fn record(id: &str, beta: Option<f64>, gamma: f64, eta: Option<EtaResult>) -> TextResults {
        TextResults {
            source_id: id.into(),
            fits: vec![OrderFits {
                order: 2,
                power: beta.map(|b| fit(Model::Power, b, 0.95)),
                log_power: Some(fit(Model::LogPower, gamma, 0.97)),
            }],
            eta,
        }
    }

    #[test]
    fn single_result() {
        let s = summarize_dataset("x", &[record("a", Some(0.4), 0.9, None)]).unwrap();
        let beta = s.exponent(ExponentKind::Beta, Some(2)).unwrap();
        assert_eq!(beta.mean, 0.4);
        assert_eq!(beta.std_dev, 0.0);
        assert!(beta.single_value);
        assert!(s.exponent(ExponentKind::Eta, None).is_none());
    }

    #[test]
    fn failures_and_preferences() {
        let eta_ok = EtaResult { eta: 2.0, r_squared: 0.9, converged: true, n_points: 10 };
        let eta_bad = EtaResult { eta: 9.0, r_squared: 0.1, converged: false, n_points: 10 };
        let results = vec![
            record("b", Some(0.5), 0.8, Some(eta_ok)),
            record("a", None, 0.9, Some(eta_bad)),
            record("c", Some(0.3), 1.0, Some(eta_ok)),
        ];
        let s = summarize_dataset("x", &results).unwrap();
        let beta = s.exponent(ExponentKind::Beta, Some(2)).unwrap();
        assert_eq!((beta.n_texts, beta.n_failed), (3, 1));
        assert_eq!(beta.values, vec![0.5, 0.3]);
        assert_abs_diff_eq!(beta.mean, 0.4, epsilon = 1e-15);
        let eta = s.exponent(ExponentKind::Eta, None).unwrap();
        assert_eq!((eta.n_texts, eta.n_failed), (3, 1));
        // every comparable text prefers log-power (0.97 > 0.95)
        assert_eq!(s.preferences[0].log_power_better, 2);
        assert_eq!(s.preferences[0].compared, 2);
        assert!(matches!(summarize_dataset("x", &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn summary_of_simulated_population() {
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(2024);
        let dist = Normal::new(0.347, 0.032).unwrap();
        let results: Vec<TextResults> = (0..100)
            .map(|i| record(&format!("t{i:03}"), Some(dist.sample(&mut rng)), 0.9, None))
            .collect();
        let s = summarize_dataset("gpt-sim", &results).unwrap();
        let beta = s.exponent(ExponentKind::Beta, Some(2)).unwrap();
        assert!((beta.mean - 0.347).abs() < 0.01);
        // brute-force recomputation
        let vals = &beta.values;
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
        assert_abs_diff_eq!(beta.mean, mean, epsilon = 1e-15);
        assert_abs_diff_eq!(beta.std_dev, sd, epsilon = 1e-15);
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(beta.median, (sorted[49] + sorted[50]) / 2.0, epsilon = 1e-15);
        assert!(beta.q1 <= beta.median && beta.median <= beta.q3);
        assert!(beta.whisker_low >= beta.q1 - 1.5 * (beta.q3 - beta.q1));
        assert_eq!(s.preferences[0].log_power_better, 100);
    }

    #[test]
    fn quantiles() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25), 2.0);
        assert!(quantile(&[], 0.5).is_nan());
    }
}
