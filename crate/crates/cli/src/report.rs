//! Structured run report and optional flat CSV tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "relinfo";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Inputs,
    pub results: Value,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    /// Fully resolved configuration; replay with `--config`.
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub generator: String,
    pub version: String,
    pub timestamp_unix: u64,
    /// Worker threads requested; results do not depend on it.
    pub workers: usize,
}

impl Report {
    /// The report without the fields that vary between identical runs
    /// (timestamp, worker count and argv spelling).
    pub fn comparable(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(p) = v.get_mut("provenance").and_then(Value::as_object_mut) {
            p.remove("timestamp_unix");
            p.remove("workers");
        }
        if let Some(i) = v.get_mut("inputs").and_then(Value::as_object_mut) {
            i.remove("argv");
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A flat numeric table written as `<command>_<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn write_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn write_tables(dir: &Path, command: &str, tables: &[Table]) -> CliResult<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| write_error(dir, e))?;
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(format!("{command}_{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| write_error(&path, e))?;
        w.write_record(&t.header).map_err(|e| write_error(&path, e))?;
        for row in &t.rows {
            w.write_record(row).map_err(|e| write_error(&path, e))?;
        }
        w.flush().map_err(|e| write_error(&path, e))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

/// Loads a replay configuration from either a bare [`ExperimentConfig`] or a
/// previous report, whose `inputs.config` is used.
pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Input {
        file: path.display().to_string(),
        line: e.line() as u64,
        column: e.column().to_string(),
        message: e.to_string(),
    })?;
    let config = if value.get("inputs").is_some() {
        serde_json::from_value::<Report>(value).map(|r| r.inputs.config)
    } else {
        serde_json::from_value::<ExperimentConfig>(value)
    };
    config.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
