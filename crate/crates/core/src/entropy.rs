//! Empirical Renyi spectra, occupancy estimation and finite-size
//! corrections.

use serde::{Deserialize, Serialize};

use crate::counting::{check_order, BlockStatsSeries, PowerSumSeries};
use crate::error::{Error, Result};

/// Absolute residual target for the occupancy inversion.
pub const LAMBDA_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub m: usize,
    pub total: u64,
    /// Empirical Renyi entropy in bits; `None` where the power sum is zero.
    pub entropy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySpectrum {
    pub order: u32,
    pub points: Vec<SpectrumPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub m: usize,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSeries {
    pub points: Vec<LambdaPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedPoint {
    pub m: usize,
    pub entropy: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    /// `entropy + delta`, defined only where both parts are.
    pub corrected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedSeries {
    pub order: u32,
    pub points: Vec<CorrectedPoint>,
}

impl CorrectedSeries {
    /// `(m, y_m)` for every defined point with `lo <= m <= hi`.
    pub fn defined_in(&self, lo: usize, hi: usize) -> Vec<(usize, f64)> {
        self.points
            .iter()
            .filter(|p| p.m >= lo && p.m <= hi)
            .filter_map(|p| p.corrected.map(|y| (p.m, y)))
            .collect()
    }
}

/// `H_a(m) = log2(P_a(m) / T_m^a) / (1 - a)` without renormalizing the
/// thresholded mass.
pub fn renyi_spectrum(power_sums: &PowerSumSeries, block_stats: &BlockStatsSeries) -> Result<EntropySpectrum> {
    if power_sums.rows.len() != block_stats.rows.len() {
        return Err(Error::MismatchedSeries(format!(
            "power sums cover {} lengths, block stats {}",
            power_sums.rows.len(),
            block_stats.rows.len()
        )));
    }
    let order = power_sums.order;
    let points = power_sums
        .rows
        .iter()
        .zip(&block_stats.rows)
        .map(|(ps, bs)| {
            if ps.m != bs.m {
                return Err(Error::MismatchedSeries(format!("length {} vs {}", ps.m, bs.m)));
            }
            let entropy = (ps.power_sum > 0).then(|| {
                // T_m^order fits in u128 whenever the power sum was computable
                let mass = ps.power_sum as f64 / (bs.total as u128).pow(order) as f64;
                // + 0.0 turns -0.0 into 0.0 for a unit mass
                mass.log2() / (1.0 - order as f64) + 0.0
            });
            Ok(SpectrumPoint {
                m: bs.m,
                total: bs.total,
                entropy,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropySpectrum { order, points })
}

/// Expected repetition fraction under uniform occupancy,
/// `f(x) = 1 - (1 - e^-x) / x`.
pub fn occupancy_fraction(lambda: f64) -> f64 {
    if lambda < 1e-4 {
        // x/2 - x^2/6 + x^3/24 - x^4/120
        let x = lambda;
        x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)))
    } else {
        1.0 + (-lambda).exp_m1() / lambda
    }
}

/// Inverts [`occupancy_fraction`] by bisection in log space. `f` is strictly
/// increasing from 0 to 1 on `(0, inf)`.
pub fn repetition_fraction_to_lambda(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange(r));
    }
    // f(x) ~ x/2 near zero and ~ 1 - 1/x at infinity.
    let mut lo = (r).max(f64::MIN_POSITIVE);
    let mut hi = (4.0 * r).max(2.0 / (1.0 - r));
    while occupancy_fraction(lo) > r {
        lo *= 0.5;
    }
    while occupancy_fraction(hi) < r {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let f = occupancy_fraction(mid);
        if f == r {
            return Ok(mid);
        }
        if f < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (occupancy_fraction(lo), occupancy_fraction(hi));
    let best = if (flo - r).abs() <= (fhi - r).abs() { lo } else { hi };
    Ok(best)
}

/// Finite-size correction `Delta_order(lambda)` in bits.
pub fn delta_correction(order: u32, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("occupancy must be positive and finite, got {lambda}")));
    }
    let x = 1.0 / lambda;
    let value = match order {
        2 => x.ln_1p(),
        3 => 0.5 * (x * (3.0 + x)).ln_1p(),
        4 => (x * (6.0 + x * (7.0 + x))).ln_1p() / 3.0,
        other => return Err(Error::UnsupportedOrder(other)),
    };
    Ok(value / std::f64::consts::LN_2)
}

/// Occupancy estimates from `D_m / T_m`. Lengths with `D_m = 0` or
/// `D_m = T_m - 1` are left undefined.
pub fn lambda_series(block_stats: &BlockStatsSeries) -> LambdaSeries {
    let points = block_stats
        .rows
        .iter()
        .map(|row| {
            let lambda = if row.repeats == 0 || row.repeats + 1 >= row.total {
                None
            } else {
                repetition_fraction_to_lambda(row.repeats as f64 / row.total as f64).ok()
            };
            LambdaPoint { m: row.m, lambda }
        })
        .collect();
    LambdaSeries { points }
}

/// `y_m = H_a(m) + Delta_a(lambda_m)`.
pub fn corrected_series(spectrum: &EntropySpectrum, lambdas: &LambdaSeries) -> Result<CorrectedSeries> {
    check_order(spectrum.order)?;
    if spectrum.points.len() != lambdas.points.len() {
        return Err(Error::MismatchedSeries(format!(
            "spectrum covers {} lengths, occupancy series {}",
            spectrum.points.len(),
            lambdas.points.len()
        )));
    }
    let points = spectrum
        .points
        .iter()
        .zip(&lambdas.points)
        .map(|(s, l)| {
            if s.m != l.m {
                return Err(Error::MismatchedSeries(format!("length {} vs {}", s.m, l.m)));
            }
            let delta = l.lambda.map(|lam| delta_correction(spectrum.order, lam)).transpose()?;
            let corrected = match (s.entropy, delta) {
                (Some(h), Some(d)) => Some(h + d),
                _ => None,
            };
            Ok(CorrectedPoint {
                m: s.m,
                entropy: s.entropy,
                lambda: l.lambda,
                delta,
                corrected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrectedSeries {
        order: spectrum.order,
        points,
    })
}
