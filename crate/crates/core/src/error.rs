use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is not valid UTF-8 (first bad byte at offset {offset})")]
    InvalidEncoding { offset: usize },

    #[error("text is empty after normalization")]
    EmptyAfterNormalization,

    #[error("block-length cap {m_cap} must lie in [1, {n}]")]
    CapExceedsLength { m_cap: usize, n: usize },

    #[error("unsupported Renyi order {0}")]
    UnsupportedOrder(u32),

    #[error("series do not line up: {0}")]
    MismatchedSeries(String),

    #[error("repetition fraction {0} outside the open interval (0, 1)")]
    OutOfRange(f64),

    #[error("not enough usable block lengths to fit: {0}")]
    InsufficientRange(String),

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("fits cover different ranges: {0:?} vs {1:?}")]
    RangeMismatch((usize, usize), (usize, usize)),

    #[error("text of length {n} is shorter than required {required}")]
    TextTooShort { n: usize, required: usize },

    #[error("pool has {pool} texts but {requested} were requested")]
    PoolTooSmall { pool: usize, requested: usize },

    #[error("sample too small or degenerate: {0}")]
    DegenerateSample(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("generation part {part} came back empty")]
    TruncatedGeneration { part: usize },

    #[error("missing credentials: environment variable {0} is not set")]
    MissingCredentials(String),

    #[error("manifest error in {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the input or by a violated contract, as opposed to
    /// I/O or environment failures.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::Io(_) | Error::Transport { .. } | Error::MissingCredentials(_)
        )
    }
}
