//! End-to-end analysis of a single text.

use serde::{Deserialize, Serialize};

use crate::counting::{block_stats, check_order, default_m_cap, power_sums, BlockStatsSeries, PowerSumSeries};
use crate::entropy::{corrected_series, lambda_series, renyi_spectrum, CorrectedSeries};
use crate::error::{Error, Result};
use crate::fitting::{
    compare_models, fit_eta, fit_model, maxrep_growth_curve, select_fit_range, EtaResult, FitRangeRule, FitResult,
    MaxRepCurve, Model, Preference,
};
use crate::index::SubstringIndex;
use crate::stats::{OrderFits, TextResults};
use crate::text::AnalyzedText;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub orders: Vec<u32>,
    /// Largest block length analyzed; defaults to `m_max + 1`.
    pub m_cap: Option<usize>,
    pub fit_rule: FitRangeRule,
    pub seed: u64,
    pub maxrep_points: usize,
    pub maxrep_k: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            orders: vec![2, 3, 4],
            m_cap: None,
            fit_rule: FitRangeRule::default(),
            seed: 0,
            maxrep_points: 20,
            maxrep_k: 5,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() {
            return Err(Error::InvalidParameter("at least one order is required".into()));
        }
        for &order in &self.orders {
            check_order(order)?;
        }
        Ok(())
    }
}

/// Per-order spectrum, fit range and fits. A fit that could not be
/// produced carries its error message instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderAnalysis {
    pub order: u32,
    pub power_sums: PowerSumSeries,
    pub series: CorrectedSeries,
    pub fit_range: Option<(usize, usize)>,
    pub power: Option<FitResult>,
    pub log_power: Option<FitResult>,
    pub preference: Option<Preference>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextAnalysis {
    pub source_id: String,
    pub n: usize,
    pub max_repeat: usize,
    pub block_stats: BlockStatsSeries,
    pub orders: Vec<OrderAnalysis>,
}

impl TextAnalysis {
    pub fn order(&self, order: u32) -> Option<&OrderAnalysis> {
        self.orders.iter().find(|o| o.order == order)
    }

    /// True when every requested order produced both fits.
    pub fn all_fitted(&self) -> bool {
        self.orders.iter().all(|o| o.power.is_some() && o.log_power.is_some())
    }

    pub fn to_results(&self, eta: Option<EtaResult>) -> TextResults {
        TextResults {
            source_id: self.source_id.clone(),
            fits: self
                .orders
                .iter()
                .map(|o| OrderFits {
                    order: o.order,
                    power: o.power,
                    log_power: o.log_power,
                })
                .collect(),
            eta,
        }
    }
}

/// Counting, spectra and fits for every configured order. Fit failures
/// are recorded per order rather than returned as errors.
pub fn analyze_text(text: &AnalyzedText, config: &AnalysisConfig) -> Result<TextAnalysis> {
    config.validate()?;
    let index = SubstringIndex::build(text);
    let m_cap = config.m_cap.unwrap_or_else(|| default_m_cap(&index));
    let stats = block_stats(&index, m_cap)?;
    let lambdas = lambda_series(&stats);
    let mut orders = Vec::with_capacity(config.orders.len());
    for &order in &config.orders {
        let sums = power_sums(&index, order, m_cap)?;
        let spectrum = renyi_spectrum(&sums, &stats)?;
        let series = corrected_series(&spectrum, &lambdas)?;
        let mut analysis = OrderAnalysis {
            order,
            power_sums: sums,
            series,
            fit_range: None,
            power: None,
            log_power: None,
            preference: None,
            failure: None,
        };
        if let Err(err) = fit_order(&stats, &mut analysis, &config.fit_rule) {
            analysis.failure = Some(err.to_string());
        }
        orders.push(analysis);
    }
    Ok(TextAnalysis {
        source_id: text.source_id.clone(),
        n: text.len(),
        max_repeat: index.max_repeat_len(),
        block_stats: stats,
        orders,
    })
}

fn fit_order(stats: &BlockStatsSeries, analysis: &mut OrderAnalysis, rule: &FitRangeRule) -> Result<()> {
    let range = select_fit_range(stats, &analysis.power_sums, rule)?;
    analysis.fit_range = Some(range);
    let power = fit_model(&analysis.series, Model::Power, range);
    let log_power = fit_model(&analysis.series, Model::LogPower, range);
    analysis.power = power.as_ref().ok().copied();
    analysis.log_power = log_power.as_ref().ok().copied();
    let (power, log_power) = (power?, log_power?);
    analysis.preference = Some(compare_models(&power, &log_power)?);
    Ok(())
}

/// Maximal-repetition growth curve and its eta fit.
pub fn analyze_maxrep(text: &AnalyzedText, config: &AnalysisConfig) -> Result<(MaxRepCurve, EtaResult)> {
    let curve = maxrep_growth_curve(text, config.maxrep_points, config.maxrep_k, config.seed)?;
    let eta = fit_eta(&curve);
    Ok((curve, eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Provenance;

    #[test]
    fn banana_runs_but_cannot_fit() {
        let text = AnalyzedText::from_str_raw("banana", "banana", Provenance::Natural).unwrap();
        let a = analyze_text(&text, &AnalysisConfig::default()).unwrap();
        assert_eq!(a.max_repeat, 3);
        assert_eq!(a.block_stats.rows[1].repeats, 2);
        assert!(!a.all_fitted());
        assert!(a.orders.iter().all(|o| o.failure.as_deref().unwrap().contains("not enough")));
    }

    #[test]
    fn rejects_bad_orders() {
        let text = AnalyzedText::from_str_raw("banana", "b", Provenance::Natural).unwrap();
        let config = AnalysisConfig {
            orders: vec![2, 5],
            ..AnalysisConfig::default()
        };
        assert!(matches!(analyze_text(&text, &config), Err(Error::UnsupportedOrder(5))));
    }
}
