use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use longrep::corpus::{self, CorpusManifest, GenerationConfig};
use longrep::fitting::EtaResult;
use longrep::stats::{summarize_dataset, welch_t_test, DatasetSummary, TextResults};
use longrep::{analyze_maxrep, analyze_text, normalize_text, AnalysisConfig, AnalyzedText, NormalizationOptions, Provenance};

use crate::output::{write_json, write_table, Format};
use crate::rows;
use crate::{Command, GenerateKind};

/// A violated input contract; maps to exit code 2.
#[derive(Debug)]
pub struct Contract(pub String);

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Contract {}

pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Contract>().is_some() {
        return 2;
    }
    match err.downcast_ref::<longrep::Error>() {
        Some(e) if e.is_input_error() => 2,
        _ => 1,
    }
}

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Analyze { path, analysis, norm, out } => {
            cmd_analyze(&path, &analysis.config(), &norm.options(), &out.out, out.format)
        }
        Command::Batch {
            input,
            analysis,
            norm,
            out,
            label,
            workers,
            no_maxrep,
        } => {
            let label = label.unwrap_or_else(|| file_stem(&input));
            let opts = BatchOptions {
                config: analysis.config(),
                norm: norm.options(),
                workers,
                maxrep: !no_maxrep,
                label,
            };
            cmd_batch(&input, &opts, &out.out, out.format)
        }
        Command::Compare { summary_a, summary_b, out } => cmd_compare(&summary_a, &summary_b, &out.out, out.format),
        Command::Generate { kind } => cmd_generate(kind),
        Command::Maxrep {
            path,
            points,
            k,
            seed,
            norm,
            out,
        } => {
            let config = AnalysisConfig {
                seed,
                maxrep_points: points,
                maxrep_k: k,
                ..AnalysisConfig::default()
            };
            cmd_maxrep(&path, &config, &norm.options(), &out.out, out.format)
        }
        Command::Preprocess {
            raw_dir,
            out_dir,
            provenance,
            label,
            norm,
        } => {
            let label = label.unwrap_or_else(|| file_stem(&out_dir));
            cmd_preprocess(&raw_dir, &out_dir, provenance, &label, &norm.options())
        }
        Command::LlmGen {
            config,
            label,
            api_key_env,
            out,
        } => cmd_llm_gen(&config, &label, api_key_env, &out.out),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "text".into())
}

fn load(path: &Path, source_id: &str, provenance: Provenance, norm: &NormalizationOptions) -> Result<AnalyzedText> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(normalize_text(&raw, norm, source_id, provenance)?)
}

fn cmd_analyze(path: &Path, config: &AnalysisConfig, norm: &NormalizationOptions, out: &Path, format: Format) -> Result<ExitCode> {
    let stem = file_stem(path);
    let text = load(path, &stem, Provenance::Natural, norm)?;
    let analysis = analyze_text(&text, config)?;
    fs::create_dir_all(out)?;
    write_table(out, &stem, "blocks", &rows::block_rows(&analysis), format)?;
    write_table(out, &stem, "spectrum", &rows::spectrum_rows(&analysis), format)?;
    write_table(out, &stem, "fits", &rows::fit_rows(&analysis), format)?;
    let failed: Vec<String> = analysis
        .orders
        .iter()
        .filter_map(|o| o.failure.as_ref().map(|f| format!("alpha={}: {f}", o.order)))
        .collect();
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &failed {
            eprintln!("fit failed for {stem}, {f}");
        }
        Ok(ExitCode::from(2))
    }
}

pub struct BatchOptions {
    pub config: AnalysisConfig,
    pub norm: NormalizationOptions,
    pub workers: Option<usize>,
    pub maxrep: bool,
    pub label: String,
}

struct BatchInput {
    source_id: String,
    path: PathBuf,
    provenance: Provenance,
}

fn batch_inputs(input: &Path) -> Result<Vec<BatchInput>> {
    let mut inputs = if input.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(input)
            .with_context(|| format!("listing {}", input.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|path| BatchInput {
                source_id: file_stem(&path),
                path,
                provenance: Provenance::Natural,
            })
            .collect::<Vec<_>>()
    } else {
        CorpusManifest::read(input)?
            .entries
            .into_iter()
            .map(|e| BatchInput {
                source_id: e.source_id,
                path: e.path,
                provenance: e.provenance,
            })
            .collect()
    };
    inputs.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    let mut seen = BTreeSet::new();
    for i in &inputs {
        if !seen.insert(i.source_id.clone()) {
            return Err(Contract(format!("duplicate source id {:?}", i.source_id)).into());
        }
    }
    Ok(inputs)
}

struct BatchRecord {
    results: TextResults,
    rows: Vec<rows::ExponentRow>,
}

fn run_one(input: &BatchInput, opts: &BatchOptions) -> BatchRecord {
    let failed = |message: String| {
        warn!("{}: {message}", input.source_id);
        BatchRecord {
            results: TextResults {
                source_id: input.source_id.clone(),
                fits: opts
                    .config
                    .orders
                    .iter()
                    .map(|&order| longrep::stats::OrderFits {
                        order,
                        power: None,
                        log_power: None,
                    })
                    .collect(),
                eta: opts.maxrep.then_some(EtaResult {
                    eta: f64::NAN,
                    r_squared: f64::NAN,
                    converged: false,
                    n_points: 0,
                }),
            },
            rows: opts
                .config
                .orders
                .iter()
                .map(|&alpha| rows::ExponentRow {
                    source_id: input.source_id.clone(),
                    alpha,
                    beta: None,
                    r2_power: None,
                    gamma: None,
                    r2_log_power: None,
                    preference: None,
                    eta: None,
                    eta_converged: false,
                    failure: Some(message.clone()),
                })
                .collect(),
        }
    };
    let text = match load(&input.path, &input.source_id, input.provenance, &opts.norm) {
        Ok(t) => t,
        Err(e) => return failed(format!("{e:#}")),
    };
    let analysis = match analyze_text(&text, &opts.config) {
        Ok(a) => a,
        Err(e) => return failed(e.to_string()),
    };
    let (eta, eta_failure) = if opts.maxrep {
        match analyze_maxrep(&text, &opts.config) {
            Ok((_, eta)) => {
                let note = (!eta.converged).then(|| "did not converge".to_string());
                (Some(eta), note)
            }
            Err(e) => (
                Some(EtaResult {
                    eta: f64::NAN,
                    r_squared: f64::NAN,
                    converged: false,
                    n_points: 0,
                }),
                Some(e.to_string()),
            ),
        }
    } else {
        (None, None)
    };
    info!("{}: analyzed {} symbols", input.source_id, text.len());
    BatchRecord {
        rows: rows::exponent_rows(&analysis, eta.as_ref(), eta_failure.as_deref()),
        results: analysis.to_results(eta),
    }
}

pub fn cmd_batch(input: &Path, opts: &BatchOptions, out: &Path, format: Format) -> Result<ExitCode> {
    opts.config.validate()?;
    let inputs = batch_inputs(input)?;
    if inputs.is_empty() {
        return Err(Contract(format!("no input texts found in {}", input.display())).into());
    }
    let workers = opts.workers.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let mut records: Vec<BatchRecord> = pool.install(|| inputs.par_iter().map(|i| run_one(i, opts)).collect());
    records.sort_by(|a, b| a.results.source_id.cmp(&b.results.source_id));

    let (results, tables): (Vec<TextResults>, Vec<Vec<rows::ExponentRow>>) =
        records.into_iter().map(|r| (r.results, r.rows)).unzip();
    let table: Vec<rows::ExponentRow> = tables.into_iter().flatten().collect();
    let summary = summarize_dataset(&opts.label, &results)?;

    fs::create_dir_all(out)?;
    write_table(out, "", "exponents", &table, format)?;
    write_table(out, "", "exponent_summary", &rows::summary_rows(&summary), format)?;
    write_table(out, "", "preferences", &rows::preference_rows(&summary), format)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(ExitCode::SUCCESS)
}

fn read_summary(path: &Path) -> Result<DatasetSummary> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Contract(format!("{} is not a dataset summary: {e}", path.display())).into())
}

pub fn cmd_compare(a_path: &Path, b_path: &Path, out: &Path, format: Format) -> Result<ExitCode> {
    let a = read_summary(a_path)?;
    let b = read_summary(b_path)?;
    let keys = |s: &DatasetSummary| s.exponents.iter().map(|e| (e.kind, e.order)).collect::<BTreeSet<_>>();
    if keys(&a) != keys(&b) {
        return Err(Contract(format!(
            "summaries cover different exponent sets: {:?} vs {:?}",
            keys(&a),
            keys(&b)
        ))
        .into());
    }
    let table: Vec<rows::CompareRow> = a
        .exponents
        .iter()
        .map(|ea| {
            let eb = b.exponent(ea.kind, ea.order).expect("key sets are equal");
            let result = welch_t_test(&ea.values, &eb.values).map_err(|e| e.to_string());
            rows::compare_row(ea.kind, ea.order, ea.values.len(), eb.values.len(), result)
        })
        .collect();
    fs::create_dir_all(out)?;
    write_table(out, "", "compare", &table, format)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct GeneratedMeta<'a> {
    kind: &'a str,
    n: usize,
    p: Option<f64>,
    seed: u64,
    input: Option<String>,
}

fn cmd_generate(kind: GenerateKind) -> Result<ExitCode> {
    let (text, name, out, meta_kind, p, seed, input) = match kind {
        GenerateKind::Bernoulli { n, p, seed, name, out } => {
            let text = corpus::bernoulli_sequence(n, p, seed)?;
            let name = name.unwrap_or_else(|| text.source_id.clone());
            (text, name, out, "bernoulli", Some(p), seed, None)
        }
        GenerateKind::Shuffle {
            input,
            seed,
            name,
            norm,
            out,
        } => {
            let original = load(&input, &file_stem(&input), Provenance::Natural, &norm.options())?;
            let text = corpus::shuffle_text(&original, seed)?;
            let name = name.unwrap_or_else(|| format!("{}-shuffled", file_stem(&input)));
            (text, name, out, "shuffle", None, seed, Some(input.display().to_string()))
        }
    };
    fs::create_dir_all(&out.out)?;
    fs::write(out.out.join(format!("{name}.txt")), text.as_string())?;
    write_json(
        &out.out.join(format!("{name}.meta.json")),
        &GeneratedMeta {
            kind: meta_kind,
            n: text.len(),
            p,
            seed,
            input,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_maxrep(path: &Path, config: &AnalysisConfig, norm: &NormalizationOptions, out: &Path, format: Format) -> Result<ExitCode> {
    let stem = file_stem(path);
    let text = load(path, &stem, Provenance::Natural, norm)?;
    let (curve, eta) = analyze_maxrep(&text, config)?;
    fs::create_dir_all(out)?;
    write_table(out, &stem, "maxrep", &rows::maxrep_rows(&curve), format)?;
    write_table(out, &stem, "eta", &[rows::eta_row(&curve, &eta)], format)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_preprocess(raw: &Path, out: &Path, provenance: Provenance, label: &str, norm: &NormalizationOptions) -> Result<ExitCode> {
    let report = corpus::preprocess_dir(raw, out, norm, provenance, label)?;
    for (path, reason) in &report.skipped {
        eprintln!("warning: skipped {}: {reason}", path.display());
    }
    if report.manifest.is_empty() {
        return Err(Contract(format!("no usable texts in {}", raw.display())).into());
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct LlmMeta<'a> {
    label: &'a str,
    endpoint: &'a str,
    model: &'a str,
    num_parts: usize,
    target_tokens: usize,
    n: usize,
    archive: Vec<String>,
}

fn cmd_llm_gen(config_path: &Path, label: &str, api_key_env: Option<String>, out: &Path) -> Result<ExitCode> {
    let mut config = GenerationConfig::from_file(config_path)?;
    if api_key_env.is_some() {
        config.api_key_env = api_key_env;
    }
    fs::create_dir_all(out)?;
    let generated = corpus::llm_generate(&config, label, &out.join("raw"))?;
    fs::write(out.join(format!("{label}.txt")), generated.text.as_string())?;
    write_json(
        &out.join(format!("{label}.meta.json")),
        &LlmMeta {
            label,
            endpoint: &config.endpoint,
            model: &config.model,
            num_parts: config.num_parts,
            target_tokens: config.target_tokens,
            n: generated.text.len(),
            archive: generated.archive.iter().map(|p| p.display().to_string()).collect(),
        },
    )?;
    Ok(ExitCode::SUCCESS)
}
