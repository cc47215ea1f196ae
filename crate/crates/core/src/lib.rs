//! Long-range repetition statistics for symbol sequences.
//!
//! The pipeline runs text normalization, suffix-array indexing, exact
//! per-length repetition counts, empirical Renyi spectra with finite-size
//! corrections, and finally power-law versus log-power growth fits.

pub mod corpus;
pub mod counting;
pub mod entropy;
pub mod error;
pub mod fitting;
pub mod index;
pub mod pipeline;
pub mod stats;
pub mod text;

pub use error::{Error, Result};
pub use pipeline::{analyze_maxrep, analyze_text, AnalysisConfig, TextAnalysis};
pub use text::{normalize_text, AnalyzedText, NormalizationOptions, Provenance};
