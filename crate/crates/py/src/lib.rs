//! Python bindings for `longrep`.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use longrep::corpus;
use longrep::counting;
use longrep::entropy;
use longrep::fitting::{self, FitRangeRule, FitResult, Model};
use longrep::index::SubstringIndex;
use longrep::pipeline::OrderAnalysis;
use longrep::stats;
use longrep::{AnalysisConfig, AnalyzedText, NormalizationOptions, Provenance};

fn py_err(e: longrep::Error) -> PyErr {
    match e {
        longrep::Error::Io(e) => PyOSError::new_err(e.to_string()),
        e if e.is_input_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

#[derive(FromPyObject)]
enum RawText {
    Bytes(Vec<u8>),
    Str(String),
}

impl RawText {
    fn into_bytes(self) -> Vec<u8> {
        match self {
            RawText::Bytes(b) => b,
            RawText::Str(s) => s.into_bytes(),
        }
    }
}

/// A normalized symbol sequence with its source id and provenance.
#[pyclass(name = "Text", module = "longrep", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyText {
    inner: AnalyzedText,
}

#[pymethods]
impl PyText {
    /// Wrap `text` as-is, one symbol per code point.
    #[new]
    #[pyo3(signature = (text, source_id = "text", provenance = "natural"))]
    fn new(text: &str, source_id: &str, provenance: &str) -> PyResult<Self> {
        let provenance: Provenance = provenance.parse().map_err(py_err)?;
        let inner = AnalyzedText::from_str_raw(text, source_id, provenance).map_err(py_err)?;
        Ok(PyText { inner })
    }

    #[getter]
    fn source_id(&self) -> &str {
        &self.inner.source_id
    }

    #[getter]
    fn provenance(&self) -> String {
        self.inner.provenance.to_string()
    }

    fn alphabet_size(&self) -> usize {
        self.inner.alphabet_size()
    }

    fn prefix(&self, length: usize) -> PyResult<Self> {
        Ok(PyText {
            inner: self.inner.prefix(length).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.as_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Text(source_id={:?}, provenance={}, n={})",
            self.inner.source_id,
            self.inner.provenance,
            self.inner.len()
        )
    }
}

#[pyclass(name = "FitResult", module = "longrep", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyFit {
    model: String,
    exponent: f64,
    scale: f64,
    r_squared: f64,
    initial_r_squared: f64,
    fit_range: (usize, usize),
    n_points: usize,
}

impl From<&FitResult> for PyFit {
    fn from(f: &FitResult) -> Self {
        PyFit {
            model: f.model.to_string(),
            exponent: f.exponent,
            scale: f.scale,
            r_squared: f.r_squared,
            initial_r_squared: f.initial_r_squared,
            fit_range: f.fit_range,
            n_points: f.n_points,
        }
    }
}

#[pymethods]
impl PyFit {
    fn __repr__(&self) -> String {
        format!(
            "FitResult(model={}, exponent={:.6}, scale={:.6}, r_squared={:.6}, fit_range={:?})",
            self.model, self.exponent, self.scale, self.r_squared, self.fit_range
        )
    }
}

type SeriesRow = (usize, Option<f64>, Option<f64>, Option<f64>, Option<f64>);

/// Per-order results: corrected series rows are (m, entropy, lambda, delta, corrected).
#[pyclass(name = "OrderResult", module = "longrep", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyOrder {
    alpha: u32,
    fit_range: Option<(usize, usize)>,
    power: Option<PyFit>,
    log_power: Option<PyFit>,
    preference: Option<String>,
    failure: Option<String>,
    series: Vec<SeriesRow>,
}

impl From<&OrderAnalysis> for PyOrder {
    fn from(o: &OrderAnalysis) -> Self {
        PyOrder {
            alpha: o.order,
            fit_range: o.fit_range,
            power: o.power.as_ref().map(PyFit::from),
            log_power: o.log_power.as_ref().map(PyFit::from),
            preference: o.preference.map(|p| p.to_string()),
            failure: o.failure.clone(),
            series: o
                .series
                .points
                .iter()
                .map(|p| (p.m, p.entropy, p.lambda, p.delta, p.corrected))
                .collect(),
        }
    }
}

/// Full analysis of one text; block rows are (m, T, K, D).
#[pyclass(name = "Analysis", module = "longrep", frozen, get_all)]
struct PyAnalysis {
    source_id: String,
    n: usize,
    max_repeat: usize,
    block_stats: Vec<(usize, u64, u64, u64)>,
    orders: Vec<PyOrder>,
}

#[pymethods]
impl PyAnalysis {
    fn order(&self, alpha: u32) -> Option<PyOrder> {
        self.orders.iter().find(|o| o.alpha == alpha).cloned()
    }

    fn __repr__(&self) -> String {
        format!(
            "Analysis(source_id={:?}, n={}, max_repeat={}, alphas={:?})",
            self.source_id,
            self.n,
            self.max_repeat,
            self.orders.iter().map(|o| o.alpha).collect::<Vec<_>>()
        )
    }
}

#[pyclass(name = "WelchResult", module = "longrep", frozen, get_all)]
struct PyWelch {
    t_statistic: f64,
    degrees_of_freedom: f64,
    p_value: f64,
    mean_a: f64,
    mean_b: f64,
}

#[pymethods]
impl PyWelch {
    fn __repr__(&self) -> String {
        format!(
            "WelchResult(t={}, dof={}, p={})",
            self.t_statistic, self.degrees_of_freedom, self.p_value
        )
    }
}

#[pyclass(name = "EtaResult", module = "longrep", frozen, get_all)]
struct PyEta {
    eta: f64,
    r_squared: f64,
    converged: bool,
    n_points: usize,
}

#[pymethods]
impl PyEta {
    fn __repr__(&self) -> String {
        format!("EtaResult(eta={}, r_squared={}, converged={})", self.eta, self.r_squared, self.converged)
    }
}

/// Decode and normalize raw text (bytes must be UTF-8).
#[pyfunction]
#[pyo3(signature = (raw, source_id = "text", provenance = "natural", strip_gutenberg = true, lowercase = false, strip_punctuation = false))]
fn normalize(
    raw: RawText,
    source_id: &str,
    provenance: &str,
    strip_gutenberg: bool,
    lowercase: bool,
    strip_punctuation: bool,
) -> PyResult<PyText> {
    let provenance: Provenance = provenance.parse().map_err(py_err)?;
    let options = NormalizationOptions {
        strip_gutenberg,
        lowercase,
        strip_punctuation,
    };
    let inner = longrep::normalize_text(&raw.into_bytes(), &options, source_id, provenance).map_err(py_err)?;
    Ok(PyText { inner })
}

fn index_and_cap(text: &PyText, m_cap: Option<usize>) -> (SubstringIndex, usize) {
    let index = SubstringIndex::build(&text.inner);
    let cap = m_cap.unwrap_or_else(|| counting::default_m_cap(&index));
    (index, cap)
}

/// Rows of (m, T_m, K_m, D_m) for m = 1..=m_cap.
#[pyfunction]
#[pyo3(signature = (text, m_cap = None))]
fn block_stats(text: &PyText, m_cap: Option<usize>) -> PyResult<Vec<(usize, u64, u64, u64)>> {
    let (index, cap) = index_and_cap(text, m_cap);
    let series = counting::block_stats(&index, cap).map_err(py_err)?;
    Ok(series.rows.iter().map(|r| (r.m, r.total, r.distinct, r.repeats)).collect())
}

/// Rows of (m, P_alpha(m), eligible block types).
#[pyfunction]
#[pyo3(signature = (text, alpha, m_cap = None))]
fn power_sums(text: &PyText, alpha: u32, m_cap: Option<usize>) -> PyResult<Vec<(usize, u128, u64)>> {
    let (index, cap) = index_and_cap(text, m_cap);
    let series = counting::power_sums(&index, alpha, cap).map_err(py_err)?;
    Ok(series.rows.iter().map(|r| (r.m, r.power_sum, r.eligible_types)).collect())
}

/// Rows of (m, entropy in bits or None).
#[pyfunction]
#[pyo3(signature = (text, alpha, m_cap = None))]
fn renyi_spectrum(text: &PyText, alpha: u32, m_cap: Option<usize>) -> PyResult<Vec<(usize, Option<f64>)>> {
    let (index, cap) = index_and_cap(text, m_cap);
    let bs = counting::block_stats(&index, cap).map_err(py_err)?;
    let ps = counting::power_sums(&index, alpha, cap).map_err(py_err)?;
    let spectrum = entropy::renyi_spectrum(&ps, &bs).map_err(py_err)?;
    Ok(spectrum.points.iter().map(|p| (p.m, p.entropy)).collect())
}

/// Length of the longest substring occurring at least twice.
#[pyfunction]
fn max_repetition(text: &PyText) -> usize {
    counting::max_repetition(&SubstringIndex::build(&text.inner))
}

#[pyfunction]
fn occupancy_fraction(lam: f64) -> f64 {
    entropy::occupancy_fraction(lam)
}

#[pyfunction]
fn repetition_fraction_to_lambda(r: f64) -> PyResult<f64> {
    entropy::repetition_fraction_to_lambda(r).map_err(py_err)
}

#[pyfunction]
fn delta_correction(alpha: u32, lam: f64) -> PyResult<f64> {
    entropy::delta_correction(alpha, lam).map_err(py_err)
}

/// Fit `y = c * exp(e * u)` to (m, y) points, with u = ln m or ln log2 m.
#[pyfunction]
#[pyo3(signature = (points, model = "power"))]
fn fit(points: Vec<(f64, f64)>, model: &str) -> PyResult<PyFit> {
    let model: Model = model.parse().map_err(py_err)?;
    let result = fitting::fit_points(&points, model).map_err(py_err)?;
    Ok(PyFit::from(&result))
}

#[pyfunction]
#[pyo3(signature = (text, alphas = vec![2, 3, 4], m_cap = None, fit_min_types = 10, fit_min_repeats = 2, fit_m_lo = 2, fit_m_hi = None))]
fn analyze(
    text: &PyText,
    alphas: Vec<u32>,
    m_cap: Option<usize>,
    fit_min_types: u64,
    fit_min_repeats: u64,
    fit_m_lo: usize,
    fit_m_hi: Option<usize>,
) -> PyResult<PyAnalysis> {
    let config = AnalysisConfig {
        orders: alphas,
        m_cap,
        fit_rule: FitRangeRule {
            m_lo: fit_m_lo,
            min_types: fit_min_types,
            min_repeats: fit_min_repeats,
            m_hi: fit_m_hi,
        },
        ..AnalysisConfig::default()
    };
    let a = longrep::analyze_text(&text.inner, &config).map_err(py_err)?;
    Ok(PyAnalysis {
        source_id: a.source_id.clone(),
        n: a.n,
        max_repeat: a.max_repeat,
        block_stats: a
            .block_stats
            .rows
            .iter()
            .map(|r| (r.m, r.total, r.distinct, r.repeats))
            .collect(),
        orders: a.orders.iter().map(PyOrder::from).collect(),
    })
}

/// Maximal-repetition growth curve as (prefix_len, m_max) rows plus its eta fit.
#[pyfunction]
#[pyo3(signature = (text, points = 20, k = 5, seed = 0))]
fn maxrep(text: &PyText, points: usize, k: usize, seed: u64) -> PyResult<(Vec<(usize, usize)>, PyEta)> {
    let curve = fitting::maxrep_growth_curve(&text.inner, points, k, seed).map_err(py_err)?;
    let eta = fitting::fit_eta(&curve);
    Ok((
        curve.points.iter().map(|p| (p.prefix_len, p.max_repeat)).collect(),
        PyEta {
            eta: eta.eta,
            r_squared: eta.r_squared,
            converged: eta.converged,
            n_points: eta.n_points,
        },
    ))
}

#[pyfunction]
fn bernoulli(n: usize, p: f64, seed: u64) -> PyResult<PyText> {
    Ok(PyText {
        inner: corpus::bernoulli_sequence(n, p, seed).map_err(py_err)?,
    })
}

#[pyfunction]
fn shuffle(text: &PyText, seed: u64) -> PyResult<PyText> {
    Ok(PyText {
        inner: corpus::shuffle_text(&text.inner, seed).map_err(py_err)?,
    })
}

#[pyfunction]
fn welch(a: Vec<f64>, b: Vec<f64>) -> PyResult<PyWelch> {
    let r = stats::welch_t_test(&a, &b).map_err(py_err)?;
    Ok(PyWelch {
        t_statistic: r.t_statistic,
        degrees_of_freedom: r.degrees_of_freedom,
        p_value: r.p_value,
        mean_a: r.mean_a,
        mean_b: r.mean_b,
    })
}

#[pymodule]
#[pyo3(name = "longrep")]
fn longrep_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyText>()?;
    m.add_class::<PyFit>()?;
    m.add_class::<PyOrder>()?;
    m.add_class::<PyAnalysis>()?;
    m.add_class::<PyWelch>()?;
    m.add_class::<PyEta>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(block_stats, m)?)?;
    m.add_function(wrap_pyfunction!(power_sums, m)?)?;
    m.add_function(wrap_pyfunction!(renyi_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(max_repetition, m)?)?;
    m.add_function(wrap_pyfunction!(occupancy_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(repetition_fraction_to_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(delta_correction, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(maxrep, m)?)?;
    m.add_function(wrap_pyfunction!(bernoulli, m)?)?;
    m.add_function(wrap_pyfunction!(shuffle, m)?)?;
    m.add_function(wrap_pyfunction!(welch, m)?)?;
    Ok(())
}
