//! Corpus ingestion, synthetic baselines and length-matched sampling.
//!
//! All randomness goes through [`seeded_rng`], a xoshiro256++ generator
//! seeded via splitmix64, so generated corpora are identical across
//! platforms for a given seed.

pub mod llm;

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{normalize_text, AnalyzedText, NormalizationOptions, Provenance};

pub use llm::{llm_generate, GenerationConfig, RetryPolicy};

pub fn seeded_rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Binary sequence over `'0'`/`'1'` with `P('1') = p`.
pub fn bernoulli_sequence(n: usize, p: f64, seed: u64) -> Result<AnalyzedText> {
    if n == 0 {
        return Err(Error::InvalidParameter("sequence length must be at least 1".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    let mut rng = seeded_rng(seed);
    let symbols = (0..n)
        .map(|_| if rng.random::<f64>() < p { '1' } else { '0' })
        .collect();
    AnalyzedText::new(symbols, format!("bernoulli-n{n}-p{p}-s{seed}"), Provenance::Synthetic)
}

/// Uniform random permutation of the symbols (Fisher-Yates).
pub fn shuffle_text(text: &AnalyzedText, seed: u64) -> Result<AnalyzedText> {
    if text.len() < 2 {
        return Err(Error::TextTooShort {
            n: text.len(),
            required: 2,
        });
    }
    let mut symbols = text.symbols().to_vec();
    symbols.shuffle(&mut seeded_rng(seed));
    AnalyzedText::new(symbols, format!("{}-shuffled-s{seed}", text.source_id), Provenance::Shuffled)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub source_id: String,
    pub path: PathBuf,
    pub provenance: Provenance,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    pub label: String,
    pub entries: Vec<ManifestEntry>,
}

const MANIFEST_LABEL_PREFIX: &str = "# dataset: ";

impl CorpusManifest {
    pub fn new(label: impl Into<String>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.source_id.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate source id {:?}", e.source_id)));
            }
        }
        Ok(CorpusManifest {
            label: label.into(),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Comma-separated with a header row; the first line carries the
    /// dataset label as a comment.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path)?;
        writeln!(file, "{MANIFEST_LABEL_PREFIX}{}", self.label)?;
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
        for e in &self.entries {
            writer.serialize(e).map_err(|err| manifest_error(path, err))?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a manifest; relative entry paths are resolved against the
    /// manifest's directory.
    pub fn read(path: &Path) -> Result<Self> {
        let file = fs::File::open(path)?;
        let mut reader = BufReader::new(file);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let (label, header_line) = match first.trim_end().strip_prefix(MANIFEST_LABEL_PREFIX) {
            Some(label) => (label.to_string(), None),
            None => (
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                Some(first),
            ),
        };
        let rest: Box<dyn Read> = match header_line {
            Some(h) => Box::new(std::io::Cursor::new(h.into_bytes()).chain(reader)),
            None => Box::new(reader),
        };
        let base = path.parent().unwrap_or(Path::new("."));
        let mut entries = Vec::new();
        for row in csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(rest).deserialize() {
            let mut entry: ManifestEntry = row.map_err(|err| manifest_error(path, err))?;
            if entry.path.is_relative() {
                entry.path = base.join(&entry.path);
            }
            entries.push(entry);
        }
        Self::new(label, entries)
    }
}

fn manifest_error(path: &Path, err: csv::Error) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

/// Greedy nearest-length matching without replacement in log-length space.
/// Reference lengths are visited in a seeded random order (cycling if
/// `count` exceeds the reference size); ties go to the earlier pool entry.
pub fn length_matched_sample(
    pool: &CorpusManifest,
    reference: &CorpusManifest,
    count: usize,
    seed: u64,
) -> Result<CorpusManifest> {
    if pool.len() < count {
        return Err(Error::PoolTooSmall {
            pool: pool.len(),
            requested: count,
        });
    }
    if reference.is_empty() && count > 0 {
        return Err(Error::EmptyInput("reference manifest has no entries".into()));
    }
    if pool.entries.iter().chain(&reference.entries).any(|e| e.n == 0) {
        return Err(Error::InvalidParameter("manifest entry with zero length".into()));
    }
    let mut order: Vec<usize> = (0..reference.len()).collect();
    order.shuffle(&mut seeded_rng(seed));
    let mut used = vec![false; pool.len()];
    let mut picked = Vec::with_capacity(count);
    for k in 0..count {
        let target = (reference.entries[order[k % order.len()]].n as f64).ln();
        let best = pool
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, e)| (i, ((e.n as f64).ln() - target).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .expect("pool has unused entries while k < count <= pool size");
        used[best] = true;
        picked.push(pool.entries[best].clone());
    }
    CorpusManifest::new(pool.label.clone(), picked)
}

/// Outcome of preprocessing one directory.
#[derive(Debug)]
pub struct PreprocessReport {
    pub manifest: CorpusManifest,
    /// `(input file, reason)` for every skipped file.
    pub skipped: Vec<(PathBuf, String)>,
}

/// Normalizes every regular file in `raw_dir` (sorted by name) into
/// `out_dir/<stem>.txt` and writes `out_dir/manifest.csv`.
pub fn preprocess_dir(
    raw_dir: &Path,
    out_dir: &Path,
    options: &NormalizationOptions,
    provenance: Provenance,
    label: &str,
) -> Result<PreprocessReport> {
    let mut inputs: Vec<PathBuf> = fs::read_dir(raw_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    inputs.sort();
    fs::create_dir_all(out_dir)?;
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for input in inputs {
        let stem = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "text".into());
        let outcome = fs::read(&input)
            .map_err(Error::from)
            .and_then(|raw| normalize_text(&raw, options, stem.clone(), provenance));
        match outcome {
            Ok(text) => {
                let out_path = out_dir.join(format!("{stem}.txt"));
                fs::write(&out_path, text.as_string())?;
                entries.push(ManifestEntry {
                    source_id: stem,
                    path: PathBuf::from(format!("{}.txt", text.source_id)),
                    provenance,
                    n: text.len(),
                });
            }
            Err(err) => {
                warn!("skipping {}: {err}", input.display());
                skipped.push((input, err.to_string()));
            }
        }
    }
    let manifest = CorpusManifest::new(label, entries)?;
    manifest.write(&out_dir.join("manifest.csv"))?;
    Ok(PreprocessReport { manifest, skipped })
}

/// Reads an already-normalized text file as-is (no sentinel stripping),
/// re-applying whitespace normalization.
pub fn load_text(path: &Path, source_id: impl Into<String>, provenance: Provenance) -> Result<AnalyzedText> {
    let raw = fs::read(path)?;
    let options = NormalizationOptions {
        strip_gutenberg: false,
        ..NormalizationOptions::default()
    };
    normalize_text(&raw, &options, source_id, provenance)
}
