//! Stream file ingestion.
//!
//! Rows are `(experiment_id, day, estimate, sigma)`, as CSV with a header or
//! as a JSON array of objects. Row numbers in diagnostics are file lines for
//! CSV (the header is row 1) and 1-based array positions for JSON.

use std::collections::HashMap;
use std::path::Path;

use ppos_core::EffectStream;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

const COLUMNS: [&str; 4] = ["experiment_id", "day", "estimate", "sigma"];

#[derive(Debug, Clone, Deserialize)]
struct Row {
    experiment_id: String,
    day: u64,
    estimate: f64,
    sigma: f64,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub id: String,
    pub stream: EffectStream,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct StreamFile {
    pub experiments: Vec<Experiment>,
    pub digest: InputDigest,
}

pub(crate) fn read_bytes(path: &Path) -> CliResult<(Vec<u8>, InputDigest)> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let digest = InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    Ok((bytes, digest))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub(crate) fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Deserializes numbered records from CSV (with the given required header)
/// or from a JSON array.
pub(crate) fn read_records<T: for<'de> Deserialize<'de>>(
    path: &Path,
    bytes: &[u8],
    columns: &[&str],
) -> CliResult<Vec<(u64, T)>> {
    let name = path.display().to_string();
    if is_json(path) {
        let values: Vec<serde_json::Value> = serde_json::from_slice(bytes).map_err(|e| {
            CliError::parse(&name, e.line() as u64, format!("invalid JSON array: {e}"))
        })?;
        return values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let row = i as u64 + 1;
                serde_json::from_value(v)
                    .map(|r| (row, r))
                    .map_err(|e| CliError::parse(&name, row, e.to_string()))
            })
            .collect();
    }

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| CliError::parse(&name, 1, e.to_string()))?
        .clone();
    for col in columns {
        if !headers.iter().any(|h| h == *col) {
            return Err(CliError::parse(
                &name,
                1,
                format!(
                    "missing column `{col}` (header must contain {})",
                    columns.join(",")
                ),
            ));
        }
    }
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let next_line = out.len() as u64 + 2;
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(next_line, |p| p.line());
                let value = record
                    .deserialize(Some(&headers))
                    .map_err(|e| CliError::parse(&name, line, deserialize_message(&e)))?;
                out.push((line, value));
            }
            Err(e) => {
                let line = e.position().map_or(next_line, |p| p.line());
                return Err(CliError::parse(&name, line, e.to_string()));
            }
        }
    }
    Ok(out)
}

fn deserialize_message(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    }
}

struct Building {
    id: String,
    first_row: u64,
    sigma: f64,
    days: Vec<(u64, u64, f64)>,
}

pub fn read_stream_file(path: &Path) -> CliResult<StreamFile> {
    let (bytes, digest) = read_bytes(path)?;
    let rows: Vec<(u64, Row)> = read_records(path, &bytes, &COLUMNS)?;
    let name = digest.path.clone();
    let err = |row: u64, msg: String| CliError::parse(&name, row, msg);

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen: HashMap<(usize, u64), u64> = HashMap::new();
    let mut building: Vec<Building> = Vec::new();
    for (row, r) in rows {
        if r.experiment_id.is_empty() {
            return Err(err(row, "experiment_id is empty".into()));
        }
        if r.day == 0 {
            return Err(err(row, "day must be a positive integer".into()));
        }
        if !r.estimate.is_finite() {
            return Err(err(row, format!("estimate {} is not finite", r.estimate)));
        }
        if !(r.sigma.is_finite() && r.sigma > 0.0) {
            return Err(err(
                row,
                format!("sigma must be positive and finite, got {}", r.sigma),
            ));
        }
        let slot = *index.entry(r.experiment_id.clone()).or_insert_with(|| {
            building.push(Building {
                id: r.experiment_id.clone(),
                first_row: row,
                sigma: r.sigma,
                days: Vec::new(),
            });
            building.len() - 1
        });
        let exp = &mut building[slot];
        if let Some(first) = seen.insert((slot, r.day), row) {
            return Err(err(
                row,
                format!(
                    "duplicate day {} for experiment `{}` (first given at row {first})",
                    r.day, exp.id
                ),
            ));
        }
        if r.sigma != exp.sigma {
            return Err(err(
                row,
                format!(
                    "sigma {} differs from {} given at row {} for experiment `{}`",
                    r.sigma, exp.sigma, exp.first_row, exp.id
                ),
            ));
        }
        exp.days.push((r.day, row, r.estimate));
    }

    let mut experiments = Vec::with_capacity(building.len());
    for mut exp in building {
        exp.days.sort_by_key(|d| d.0);
        for (i, &(day, row, _)) in exp.days.iter().enumerate() {
            let expected = i as u64 + 1;
            if day != expected {
                return Err(err(
                    row,
                    format!(
                        "experiment `{}` has no row for day {expected} (days must run consecutively from 1)",
                        exp.id
                    ),
                ));
            }
        }
        let estimates = exp.days.iter().map(|d| d.2).collect();
        experiments.push(Experiment {
            stream: EffectStream::new(estimates, exp.sigma)?,
            id: exp.id,
        });
    }
    Ok(StreamFile {
        experiments,
        digest,
    })
}
