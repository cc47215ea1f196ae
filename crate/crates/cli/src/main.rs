mod commands;
mod output;
mod rows;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use longrep::fitting::FitRangeRule;
use longrep::{AnalysisConfig, NormalizationOptions, Provenance};

use crate::output::Format;

/// Repeated-subsequence statistics, Renyi entropy spectra and
/// entropy-growth fits for long texts.
#[derive(Debug, Parser)]
#[command(name = "longrep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze one text: block statistics, spectra and model fits.
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        norm: NormArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Analyze every text in a directory or manifest.
    Batch {
        /// Directory of `.txt` files, or a manifest CSV.
        input: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        norm: NormArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Dataset label stored in the summary (defaults to the input name).
        #[arg(long)]
        label: Option<String>,
        /// Worker threads (defaults to the number of logical CPUs).
        #[arg(long)]
        workers: Option<usize>,
        /// Skip the maximal-repetition curve.
        #[arg(long)]
        no_maxrep: bool,
    },
    /// Welch t-tests between two batch summaries.
    Compare {
        summary_a: PathBuf,
        summary_b: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write a synthetic or shuffled baseline text.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Maximal-repetition growth curve and its eta exponent.
    Maxrep {
        path: PathBuf,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        norm: NormArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Normalize a directory of raw texts and write a manifest.
    Preprocess {
        raw_dir: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value = "natural")]
        provenance: Provenance,
        #[arg(long)]
        label: Option<String>,
        #[command(flatten)]
        norm: NormArgs,
    },
    /// Generate a multi-part text through a chat-completions endpoint.
    LlmGen {
        /// JSON generation config (endpoint, model, parts, retry policy).
        #[arg(long)]
        config: PathBuf,
        /// Label used as source id and file name.
        #[arg(long)]
        label: String,
        /// Override the environment variable holding the API key.
        #[arg(long)]
        api_key_env: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Subcommand)]
enum GenerateKind {
    /// i.i.d. binary sequence over '0'/'1'.
    Bernoulli {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file stem.
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Random permutation of an existing text's symbols.
    Shuffle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        norm: NormArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Clone, Args)]
struct AnalysisArgs {
    /// Renyi order (repeatable; default 2, 3 and 4).
    #[arg(long = "alpha")]
    alpha: Vec<u32>,
    /// Largest block length (default: maximal repetition + 1).
    #[arg(long)]
    m_cap: Option<usize>,
    /// Minimum number of block types reaching the order threshold.
    #[arg(long, default_value_t = 10)]
    fit_min_types: u64,
    /// Minimum number of repetitions D_m inside the fit range.
    #[arg(long, default_value_t = 2)]
    fit_min_repeats: u64,
    #[arg(long, default_value_t = 2)]
    fit_m_lo: usize,
    #[arg(long)]
    fit_m_hi: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    maxrep_points: usize,
    #[arg(long, default_value_t = 5)]
    maxrep_k: usize,
}

impl AnalysisArgs {
    fn config(&self) -> AnalysisConfig {
        let mut orders = if self.alpha.is_empty() { vec![2, 3, 4] } else { self.alpha.clone() };
        orders.sort_unstable();
        orders.dedup();
        AnalysisConfig {
            orders,
            m_cap: self.m_cap,
            fit_rule: FitRangeRule {
                m_lo: self.fit_m_lo,
                min_types: self.fit_min_types,
                min_repeats: self.fit_min_repeats,
                m_hi: self.fit_m_hi,
            },
            seed: self.seed,
            maxrep_points: self.maxrep_points,
            maxrep_k: self.maxrep_k,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct NormArgs {
    /// Do not look for Gutenberg START/END sentinels.
    #[arg(long)]
    no_gutenberg: bool,
    #[arg(long)]
    lowercase: bool,
    #[arg(long)]
    strip_punctuation: bool,
}

impl NormArgs {
    fn options(&self) -> NormalizationOptions {
        NormalizationOptions {
            strip_gutenberg: !self.no_gutenberg,
            lowercase: self.lowercase,
            strip_punctuation: self.strip_punctuation,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code_for(&err))
        }
    }
}
