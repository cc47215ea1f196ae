//! Table writers. Every table is written either as CSV (a `# schema` comment
//! line, a header row, LF endings) or as JSON (`{"schema", "rows"}`), from the
//! same row type so both formats carry identical values.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn schema_tag(table: &str) -> String {
    format!("longrep:{table}:v{SCHEMA_VERSION}")
}

/// Writes `dir/<stem>.<table>.<ext>` and returns its path.
pub fn write_table<T: Serialize>(dir: &Path, stem: &str, table: &str, rows: &[T], format: Format) -> Result<PathBuf> {
    let name = if stem.is_empty() {
        format!("{table}.{}", format.extension())
    } else {
        format!("{stem}.{table}.{}", format.extension())
    };
    let path = dir.join(name);
    let bytes = match format {
        Format::Csv => csv_bytes(table, rows)?,
        Format::Json => json_bytes(table, rows)?,
    };
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn csv_bytes<T: Serialize>(table: &str, rows: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# {}", schema_tag(table))?;
    {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct JsonTable<'a, T> {
    schema: String,
    rows: &'a [T],
}

fn json_bytes<T: Serialize>(table: &str, rows: &[T]) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&JsonTable {
        schema: schema_tag(table),
        rows,
    })?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
