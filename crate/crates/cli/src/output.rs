//! Report formatting and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Fixed 17-significant-digit rendering used for every statistic in a CSV.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders rows as newline-terminated CSV.
pub fn csv_bytes<R, S>(header: &[&str], rows: R) -> CliResult<Vec<u8>>
where
    R: IntoIterator<Item = Vec<S>>,
    S: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Runtime(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Runtime(format!("csv encoding failed: {e}")))
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Runtime(format!("json encoding failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let ctx = format!("writing {}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&ctx, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(&ctx, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(&ctx, e))?;
    tmp.persist(path).map_err(|e| CliError::io(&ctx, e.error))?;
    Ok(())
}

/// Collects the files one command writes and commits them together.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    pub fn paths(&self) -> Vec<String> {
        self.files
            .iter()
            .map(|(p, _)| p.display().to_string())
            .collect()
    }

    pub fn commit(self) -> CliResult<()> {
        for (path, _) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CliError::io(&format!("creating {}", dir.display()), e))?;
            }
        }
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        Ok(())
    }
}
