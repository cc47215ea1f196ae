//! Growth of the maximal repetition length over text prefixes and the
//! exponent `eta` in `m_max(n) ~ (log2 n)^eta`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linear_fit;
use crate::corpus::seeded_rng;
use crate::error::{Error, Result};
use crate::index::SubstringIndex;
use crate::text::AnalyzedText;

pub const MIN_PREFIX: usize = 1000;
/// Relative half-width of the prefix-length jitter.
pub const JITTER: f64 = 0.05;
/// Regressions explaining less than this are reported as not converged.
pub const MIN_ETA_R_SQUARED: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxRepPoint {
    /// Nominal prefix length.
    pub prefix_len: usize,
    /// Median maximal repetition over the jittered samples.
    pub max_repeat: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxRepCurve {
    pub points: Vec<MaxRepPoint>,
    pub smoothing_k: usize,
    pub seed: u64,
    /// Nominal prefix lengths are log-spaced from [`MIN_PREFIX`] to the text
    /// length with this many points (duplicates after rounding removed).
    pub requested_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaResult {
    pub eta: f64,
    pub r_squared: f64,
    pub converged: bool,
    pub n_points: usize,
}

/// Median-of-`k` maximal repetition at `n_points` log-spaced prefix
/// lengths. Each sample draws a prefix length uniformly within +/-5% of the
/// nominal one. The recorded medians are made monotone with a running
/// maximum, since the maximal repetition of nested prefixes cannot shrink.
pub fn maxrep_growth_curve(text: &AnalyzedText, n_points: usize, k: usize, seed: u64) -> Result<MaxRepCurve> {
    let n = text.len();
    if n < MIN_PREFIX {
        return Err(Error::TextTooShort { n, required: MIN_PREFIX });
    }
    if n_points < 5 {
        return Err(Error::InvalidParameter(format!("need at least 5 curve points, got {n_points}")));
    }
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("sample count k must be odd, got {k}")));
    }
    let mut rng = seeded_rng(seed);
    let (lo, hi) = ((MIN_PREFIX as f64).ln(), (n as f64).ln());
    let mut nominal: Vec<usize> = (0..n_points)
        .map(|i| {
            let t = i as f64 / (n_points - 1) as f64;
            ((lo + t * (hi - lo)).exp().round() as usize).clamp(MIN_PREFIX, n)
        })
        .collect();
    nominal.dedup();

    let symbols = text.symbols();
    let mut points = Vec::with_capacity(nominal.len());
    let mut running = 0usize;
    for &len in &nominal {
        let mut samples: Vec<usize> = (0..k)
            .map(|_| {
                let jittered = len as f64 * (1.0 + rng.random_range(-JITTER..=JITTER));
                let jittered = (jittered.round() as usize).clamp(1, n);
                SubstringIndex::from_symbols(&symbols[..jittered]).max_repeat_len()
            })
            .collect();
        samples.sort_unstable();
        running = running.max(samples[k / 2]);
        points.push(MaxRepPoint {
            prefix_len: len,
            max_repeat: running,
        });
    }
    Ok(MaxRepCurve {
        points,
        smoothing_k: k,
        seed,
        requested_points: n_points,
    })
}

/// Regression of `log2 m_max` on `log2 log2 n` over points with
/// `m_max >= 1`.
pub fn fit_eta(curve: &MaxRepCurve) -> EtaResult {
    let pairs: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.max_repeat >= 1 && p.prefix_len > 2)
        .map(|p| (p.prefix_len as f64, p.max_repeat as f64))
        .collect();
    eta_from_pairs(&pairs)
}

/// [`fit_eta`] on raw `(n, m_max)` pairs.
pub fn eta_from_pairs(pairs: &[(f64, f64)]) -> EtaResult {
    let usable: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(n, m)| *m > 0.0 && *n > 2.0)
        .map(|(n, m)| (n.log2().log2(), m.log2()))
        .collect();
    let n_points = usable.len();
    let failed = EtaResult {
        eta: f64::NAN,
        r_squared: f64::NAN,
        converged: false,
        n_points,
    };
    if n_points < 5 {
        return failed;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
    let y_spread = ys.iter().any(|&y| y != ys[0]);
    match linear_fit(&xs, &ys) {
        Some((slope, _, r2)) if y_spread => EtaResult {
            eta: slope,
            r_squared: r2,
            converged: r2 >= MIN_ETA_R_SQUARED,
            n_points,
        },
        _ => failed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bernoulli_sequence;
    use crate::text::Provenance;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_text_curve() {
        let text = AnalyzedText::new(vec!['a'; 10_000], "c", Provenance::Synthetic).unwrap();
        let curve = maxrep_growth_curve(&text, 6, 1, 0).unwrap();
        // k = 1 still jitters; check against the jittered lengths instead
        for p in &curve.points {
            assert!(p.max_repeat + 1 >= (p.prefix_len as f64 * 0.95) as usize);
        }
        let eta = fit_eta(&curve);
        assert!(!eta.converged || eta.eta > 5.0, "{eta:?}");
    }

    #[test]
    fn constant_text_exact_prefixes() {
        let text = AnalyzedText::new(vec!['a'; 10_000], "c", Provenance::Synthetic).unwrap();
        for len in [1000, 2500, 10_000] {
            let idx = SubstringIndex::from_symbols(&text.symbols()[..len]);
            assert_eq!(idx.max_repeat_len(), len - 1);
        }
    }

    #[test]
    fn curve_is_monotone_and_deterministic() {
        let text = bernoulli_sequence(50_000, 0.5, 1).unwrap();
        let curve = maxrep_growth_curve(&text, 8, 5, 11).unwrap();
        assert_eq!(curve.points.len(), 8);
        assert_eq!(curve.points[0].prefix_len, 1000);
        assert_eq!(curve.points[7].prefix_len, 50_000);
        for w in curve.points.windows(2) {
            assert!(w[0].prefix_len < w[1].prefix_len);
            assert!(w[0].max_repeat <= w[1].max_repeat);
        }
        assert_eq!(curve, maxrep_growth_curve(&text, 8, 5, 11).unwrap());
    }

    #[test]
    fn argument_errors() {
        let short = bernoulli_sequence(999, 0.5, 1).unwrap();
        assert!(matches!(maxrep_growth_curve(&short, 10, 5, 0), Err(Error::TextTooShort { .. })));
        let ok = bernoulli_sequence(2000, 0.5, 1).unwrap();
        assert!(maxrep_growth_curve(&ok, 4, 5, 0).is_err());
        assert!(maxrep_growth_curve(&ok, 5, 4, 0).is_err());
    }

    #[test]
    fn exact_square_law() {
        let curve = MaxRepCurve {
            points: (10..=20)
                .map(|k| MaxRepPoint {
                    prefix_len: 1usize << k,
                    max_repeat: k * k,
                })
                .collect(),
            smoothing_k: 1,
            seed: 0,
            requested_points: 11,
        };
        let eta = fit_eta(&curve);
        assert!(eta.converged);
        assert_abs_diff_eq!(eta.eta, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eta.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_curves_do_not_converge() {
        let flat: Vec<(f64, f64)> = (0..8).map(|i| (1000.0 * 2f64.powi(i), 7.0)).collect();
        assert!(!eta_from_pairs(&flat).converged);
        let few: Vec<(f64, f64)> = (0..4).map(|i| (1000.0 * 2f64.powi(i), 7.0 + i as f64)).collect();
        assert!(!eta_from_pairs(&few).converged);
    }

    proptest! {
        #[test]
        fn eta_recovered_from_exact_law(eta in 0.5f64..3.0, c in 0.2f64..5.0) {
            let pairs: Vec<(f64, f64)> = (0..12)
                .map(|i| {
                    let n = 1000.0 * 1.8f64.powi(i);
                    (n, c * n.log2().powf(eta))
                })
                .collect();
            let r = eta_from_pairs(&pairs);
            prop_assert!(r.converged);
            prop_assert!((r.eta - eta).abs() < 1e-3);
        }
    }
}
