use serde::{Deserialize, Serialize};

use longrep::fitting::{EtaResult, FitResult, MaxRepCurve};
use longrep::pipeline::{OrderAnalysis, TextAnalysis};
use longrep::stats::{DatasetSummary, ExponentKind, WelchResult};

#[derive(Debug, Serialize)]
pub struct BlockRow {
    pub m: usize,
    pub total: u64,
    pub distinct: u64,
    pub repeats: u64,
}

#[derive(Debug, Serialize)]
pub struct SpectrumRow {
    pub alpha: u32,
    pub m: usize,
    pub power_sum: String,
    pub eligible_types: u64,
    pub entropy: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub corrected: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct FitRow {
    pub alpha: u32,
    pub model: String,
    pub exponent: Option<f64>,
    pub scale: Option<f64>,
    pub r_squared: Option<f64>,
    pub m_lo: Option<usize>,
    pub m_hi: Option<usize>,
    pub n_points: Option<usize>,
    pub preference: Option<String>,
    pub failure: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ExponentRow {
    pub source_id: String,
    pub alpha: u32,
    pub beta: Option<f64>,
    pub r2_power: Option<f64>,
    pub gamma: Option<f64>,
    pub r2_log_power: Option<f64>,
    pub preference: Option<String>,
    pub eta: Option<f64>,
    pub eta_converged: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub kind: ExponentKind,
    pub alpha: Option<u32>,
    pub n_texts: usize,
    pub n_failed: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

#[derive(Debug, Serialize)]
pub struct PreferenceRow {
    pub alpha: u32,
    pub log_power_better: usize,
    pub compared: usize,
}

#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub kind: ExponentKind,
    pub alpha: Option<u32>,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub t_statistic: Option<f64>,
    pub dof: Option<f64>,
    pub p_value: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct MaxRepRow {
    pub prefix_len: usize,
    pub max_repeat: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EtaRow {
    pub eta: Option<f64>,
    pub r_squared: Option<f64>,
    pub converged: bool,
    pub n_points: usize,
    pub smoothing_k: usize,
    pub seed: u64,
}

pub fn block_rows(a: &TextAnalysis) -> Vec<BlockRow> {
    a.block_stats
        .rows
        .iter()
        .map(|r| BlockRow {
            m: r.m,
            total: r.total,
            distinct: r.distinct,
            repeats: r.repeats,
        })
        .collect()
}

pub fn spectrum_rows(a: &TextAnalysis) -> Vec<SpectrumRow> {
    a.orders
        .iter()
        .flat_map(|o| {
            o.series.points.iter().zip(&o.power_sums.rows).map(move |(p, ps)| SpectrumRow {
                alpha: o.order,
                m: p.m,
                power_sum: ps.power_sum.to_string(),
                eligible_types: ps.eligible_types,
                entropy: p.entropy,
                lambda: p.lambda,
                delta: p.delta,
                corrected: p.corrected,
            })
        })
        .collect()
}

fn fit_row(o: &OrderAnalysis, model: &str, fit: Option<&FitResult>) -> FitRow {
    FitRow {
        alpha: o.order,
        model: model.to_string(),
        exponent: fit.map(|f| f.exponent),
        scale: fit.map(|f| f.scale),
        r_squared: fit.map(|f| f.r_squared),
        m_lo: o.fit_range.map(|r| r.0),
        m_hi: o.fit_range.map(|r| r.1),
        n_points: fit.map(|f| f.n_points),
        preference: o.preference.map(|p| p.to_string()),
        failure: fit.is_none().then(|| o.failure.clone().unwrap_or_else(|| "fit failed".into())),
    }
}

pub fn fit_rows(a: &TextAnalysis) -> Vec<FitRow> {
    a.orders
        .iter()
        .flat_map(|o| [fit_row(o, "power", o.power.as_ref()), fit_row(o, "log_power", o.log_power.as_ref())])
        .collect()
}

pub fn exponent_rows(a: &TextAnalysis, eta: Option<&EtaResult>, eta_failure: Option<&str>) -> Vec<ExponentRow> {
    a.orders
        .iter()
        .map(|o| {
            let failure = match (&o.failure, eta_failure) {
                (Some(f), Some(e)) => Some(format!("{f}; eta: {e}")),
                (Some(f), None) => Some(f.clone()),
                (None, Some(e)) => Some(format!("eta: {e}")),
                (None, None) => None,
            };
            ExponentRow {
                source_id: a.source_id.clone(),
                alpha: o.order,
                beta: o.power.map(|f| f.exponent),
                r2_power: o.power.map(|f| f.r_squared),
                gamma: o.log_power.map(|f| f.exponent),
                r2_log_power: o.log_power.map(|f| f.r_squared),
                preference: o.preference.map(|p| p.to_string()),
                eta: eta.filter(|e| e.eta.is_finite()).map(|e| e.eta),
                eta_converged: eta.is_some_and(|e| e.converged),
                failure,
            }
        })
        .collect()
}

pub fn summary_rows(s: &DatasetSummary) -> Vec<SummaryRow> {
    s.exponents
        .iter()
        .map(|e| SummaryRow {
            kind: e.kind,
            alpha: e.order,
            n_texts: e.n_texts,
            n_failed: e.n_failed,
            mean: e.mean,
            std_dev: e.std_dev,
            q1: e.q1,
            median: e.median,
            q3: e.q3,
            whisker_low: e.whisker_low,
            whisker_high: e.whisker_high,
        })
        .collect()
}

pub fn preference_rows(s: &DatasetSummary) -> Vec<PreferenceRow> {
    s.preferences
        .iter()
        .map(|p| PreferenceRow {
            alpha: p.order,
            log_power_better: p.log_power_better,
            compared: p.compared,
        })
        .collect()
}

pub fn compare_row(
    kind: ExponentKind,
    alpha: Option<u32>,
    n_a: usize,
    n_b: usize,
    result: Result<WelchResult, String>,
) -> CompareRow {
    match result {
        Ok(w) => CompareRow {
            kind,
            alpha,
            n_a,
            n_b,
            mean_a: Some(w.mean_a),
            mean_b: Some(w.mean_b),
            t_statistic: Some(w.t_statistic),
            dof: Some(w.degrees_of_freedom),
            p_value: Some(w.p_value),
            note: None,
        },
        Err(note) => CompareRow {
            kind,
            alpha,
            n_a,
            n_b,
            mean_a: None,
            mean_b: None,
            t_statistic: None,
            dof: None,
            p_value: None,
            note: Some(note),
        },
    }
}

pub fn maxrep_rows(curve: &MaxRepCurve) -> Vec<MaxRepRow> {
    curve
        .points
        .iter()
        .map(|p| MaxRepRow {
            prefix_len: p.prefix_len,
            max_repeat: p.max_repeat,
        })
        .collect()
}

pub fn eta_row(curve: &MaxRepCurve, eta: &EtaResult) -> EtaRow {
    EtaRow {
        eta: eta.eta.is_finite().then_some(eta.eta),
        r_squared: eta.r_squared.is_finite().then_some(eta.r_squared),
        converged: eta.converged,
        n_points: eta.n_points,
        smoothing_k: curve.smoothing_k,
        seed: curve.seed,
    }
}
