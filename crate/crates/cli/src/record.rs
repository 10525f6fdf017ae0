//! Append-only run log, one JSON object per line.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::input::InputDigest;

#[derive(Debug, Clone, Serialize)]
pub struct DecisionRow {
    pub experiment_id: String,
    pub rule: String,
    pub statistic: f64,
    pub verdict: String,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub timestamp: String,
    pub command: String,
    pub argv: Vec<String>,
    pub version: &'static str,
    pub inputs: Vec<InputDigest>,
    /// Fully resolved configuration, seed included.
    pub config: serde_json::Value,
    pub decisions: Vec<DecisionRow>,
    pub outputs: Vec<String>,
}

impl RunRecord {
    pub fn new(command: &str, argv: &[String], config: serde_json::Value) -> Self {
        Self {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            command: command.to_string(),
            argv: argv.to_vec(),
            version: env!("CARGO_PKG_VERSION"),
            inputs: Vec::new(),
            config,
            decisions: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn append_to(&self, log: &Path) -> CliResult<()> {
        let ctx = format!("appending to {}", log.display());
        if let Some(dir) = log.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(&ctx, e))?;
        }
        let mut line = serde_json::to_vec(self)
            .map_err(|e| CliError::Runtime(format!("json encoding failed: {e}")))?;
        line.push(b'\n');
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(log)
            .map_err(|e| CliError::io(&ctx, e))?;
        f.write_all(&line).map_err(|e| CliError::io(&ctx, e))
    }
}
