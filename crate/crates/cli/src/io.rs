//! CSV and JSON file handling.
//!
//! Tables are comma separated with a header row. Lines starting with `#` are
//! comments; outputs use them to carry the run manifest. Every cell must hold
//! a finite number.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sieve_lab_core::Observations;

use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

/// A numeric table read column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|k| self.columns[k].as_slice())
    }
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_table(&text, &path.display().to_string())
}

pub fn parse_table(text: &str, origin: &str) -> CliResult<Table> {
    // the CSV reader drops blank lines, which would hide empty cells in
    // single-column files
    let content: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect();
    let last = content.iter().rposition(|l| !l.trim().is_empty()).unwrap_or(0);
    if let Some(k) = content[..last].iter().position(|l| l.trim().is_empty()) {
        return Err(CliError::data(format!("{origin}: row {k} is empty")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(format!("{origin}: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::data(format!("{origin}: missing header row")));
    }
    for (k, h) in headers.iter().enumerate() {
        if headers[..k].contains(h) {
            return Err(CliError::data(format!("{origin}: duplicate column '{h}'")));
        }
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("{origin}: {e}")))?;
        // data rows are numbered from 1, after the header
        let line = row + 1;
        for (k, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                CliError::data(format!(
                    "{origin}: row {line}, column '{}': '{cell}' is not a number",
                    headers[k]
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::data(format!(
                    "{origin}: row {line}, column '{}': value {cell} is not finite",
                    headers[k]
                )));
            }
            columns[k].push(value);
        }
    }
    Ok(Table { headers, columns })
}

/// Observations from a table with a `y` column and optional covariate
/// columns `x1, x2, …`. Without covariates the series is autoregressive.
/// A `t` column is accepted and ignored; time is always `i/n`.
pub fn observations(table: &Table, origin: &str) -> CliResult<Observations> {
    let y = table
        .column("y")
        .ok_or_else(|| CliError::data(format!("{origin}: no 'y' column")))?
        .to_vec();
    if y.is_empty() {
        return Err(CliError::data(format!("{origin}: no data rows")));
    }
    let mut covariates = Vec::new();
    while let Some(x) = table.column(&format!("x{}", covariates.len() + 1)) {
        covariates.push(x.to_vec());
    }
    for h in &table.headers {
        let known = h == "y" || h == "t" || h.strip_prefix('x').and_then(|k| k.parse::<usize>().ok()).is_some_and(|k| k >= 1 && k <= covariates.len());
        if !known {
            return Err(CliError::data(format!("{origin}: unexpected column '{h}'")));
        }
    }
    let obs = if covariates.is_empty() {
        Observations::lagged(y)?
    } else {
        Observations::panel(y, covariates)?
    };
    Ok(obs)
}

pub fn load_observations(path: &Path) -> CliResult<Observations> {
    observations(&read_table(path)?, &path.display().to_string())
}

/// Shortest decimal form that reads back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// CSV text with the manifest in leading comment lines.
pub fn render_csv(manifest: &Manifest, headers: &[&str], rows: &[Vec<f64>]) -> CliResult<String> {
    let mut out = String::new();
    out.push_str(&format!(
        "# sieve-lab {} schema_version={}\n",
        manifest.version, manifest.schema_version
    ));
    let json = serde_json::to_string(manifest).expect("manifest serializes");
    out.push_str(&format!("# manifest {json}\n"));
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(headers)
        .and_then(|_| {
            rows.iter()
                .try_for_each(|r| writer.write_record(r.iter().map(|&v| fmt_f64(v))))
        })
        .map_err(|e| CliError::data(format!("CSV encoding failed: {e}")))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::data(format!("CSV encoding failed: {e}")))?;
    out.push_str(std::str::from_utf8(&bytes).expect("CSV output is UTF-8"));
    Ok(out)
}

pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to standard output when `path` is `None` or `-`.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, text).map_err(|source| CliError::Write {
            path: PathBuf::from(p),
            source,
        }),
        _ => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write {
                    path: PathBuf::from("-"),
                    source,
                })
        }
    }
}

/// Reads the manifest back out of a CSV written by [`render_csv`].
pub fn csv_manifest(text: &str) -> Option<Manifest> {
    text.lines()
        .find_map(|l| l.strip_prefix("# manifest "))
        .and_then(|json| serde_json::from_str(json).ok())
}
