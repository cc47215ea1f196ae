//! Text ingestion: UTF-8 decoding, Gutenberg boilerplate removal and
//! whitespace normalization into a flat symbol sequence.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Natural,
    Generated,
    Synthetic,
    Shuffled,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Natural => "natural",
            Provenance::Generated => "generated",
            Provenance::Synthetic => "synthetic",
            Provenance::Shuffled => "shuffled",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Ok(Provenance::Natural),
            "generated" => Ok(Provenance::Generated),
            "synthetic" => Ok(Provenance::Synthetic),
            "shuffled" => Ok(Provenance::Shuffled),
            other => Err(Error::InvalidParameter(format!("unknown provenance {other:?}"))),
        }
    }
}

/// A normalized symbol sequence. Symbols are Unicode scalar values; the
/// alphabet is whatever set of symbols actually occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzedText {
    symbols: Vec<char>,
    pub source_id: String,
    pub provenance: Provenance,
}

impl AnalyzedText {
    pub fn new(
        symbols: Vec<char>,
        source_id: impl Into<String>,
        provenance: Provenance,
    ) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyAfterNormalization);
        }
        Ok(AnalyzedText {
            symbols,
            source_id: source_id.into(),
            provenance,
        })
    }

    /// Wraps a string verbatim, without normalization.
    pub fn from_str_raw(s: &str, source_id: impl Into<String>, provenance: Provenance) -> Result<Self> {
        Self::new(s.chars().collect(), source_id, provenance)
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Leading `len` symbols as a new text with the same metadata.
    pub fn prefix(&self, len: usize) -> Result<AnalyzedText> {
        let len = len.min(self.len());
        AnalyzedText::new(self.symbols[..len].to_vec(), self.source_id.clone(), self.provenance)
    }

    pub fn as_string(&self) -> String {
        self.symbols.iter().collect()
    }

    /// Number of distinct symbols.
    pub fn alphabet_size(&self) -> usize {
        let mut seen: Vec<char> = self.symbols.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationOptions {
    /// Cut everything outside the `*** START OF` / `*** END OF` sentinels.
    pub strip_gutenberg: bool,
    pub lowercase: bool,
    /// Drop characters that are neither alphanumeric nor whitespace.
    pub strip_punctuation: bool,
}

impl Default for NormalizationOptions {
    fn default() -> Self {
        NormalizationOptions {
            strip_gutenberg: true,
            lowercase: false,
            strip_punctuation: false,
        }
    }
}

/// Decodes `raw`, optionally removes Gutenberg header and footer, collapses
/// whitespace runs to one space and trims both ends.
pub fn normalize_text(
    raw: &[u8],
    options: &NormalizationOptions,
    source_id: impl Into<String>,
    provenance: Provenance,
) -> Result<AnalyzedText> {
    let decoded = std::str::from_utf8(raw).map_err(|e| Error::InvalidEncoding {
        offset: e.valid_up_to(),
    })?;
    let source_id = source_id.into();
    let body = if options.strip_gutenberg {
        match strip_gutenberg_boilerplate(decoded) {
            Some(body) => body,
            None => {
                warn!("{source_id}: no Gutenberg START/END sentinels found, keeping full text");
                decoded
            }
        }
    } else {
        decoded
    };
    let symbols = normalize_symbols(body.chars(), options);
    AnalyzedText::new(symbols, source_id, provenance)
}

pub(crate) fn normalize_symbols(
    chars: impl Iterator<Item = char>,
    options: &NormalizationOptions,
) -> Vec<char> {
    let mut out = Vec::new();
    let mut pending_space = false;
    let push = |c: char, out: &mut Vec<char>, pending: &mut bool| {
        if *pending && !out.is_empty() {
            out.push(' ');
        }
        *pending = false;
        out.push(c);
    };
    for c in chars {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if options.strip_punctuation && !c.is_alphanumeric() {
            continue;
        }
        if options.lowercase {
            for lc in c.to_lowercase() {
                push(lc, &mut out, &mut pending_space);
            }
        } else {
            push(c, &mut out, &mut pending_space);
        }
    }
    out
}

/// Body between the standard Project Gutenberg sentinels, or `None` when no
/// START sentinel is present. A missing END sentinel keeps everything to the
/// end of the file.
pub fn strip_gutenberg_boilerplate(text: &str) -> Option<&str> {
    let start_line = find_sentinel_line(text, "*** START OF")?;
    let body_start = text[start_line..]
        .find('\n')
        .map(|i| start_line + i + 1)
        .unwrap_or(text.len());
    let rest = &text[body_start..];
    let body_end = find_sentinel_line(rest, "*** END OF")
        .map(|i| body_start + i)
        .unwrap_or(text.len());
    Some(&text[body_start..body_end])
}

/// Byte offset of the start of the first line containing `marker`
/// (ASCII case-insensitive).
fn find_sentinel_line(text: &str, marker: &str) -> Option<usize> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.to_ascii_uppercase().contains(marker) {
            return Some(offset);
        }
        offset += line.len();
    }
    None
}
