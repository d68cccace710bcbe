//! Run records and their CSV and text emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Command, ExperimentConfig};
use crate::CliError;

/// Crate name and version stamped on every record.
pub const VERSION: &str = concat!("thinpore-cli ", env!("CARGO_PKG_VERSION"));

/// SHA-256 of the canonical TOML emission.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

/// One row of `report.csv`. Columns a run does not produce stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Record {
    pub config_hash: String,
    pub version: String,
    pub command: String,
    /// Parameter key; rows are ordered by it.
    pub key: String,
    pub regime: String,
    pub epsilon: Option<f64>,
    pub a_eps: Option<f64>,
    pub xi_1: Option<f64>,
    pub xi_2: Option<f64>,
    pub k_1: Option<f64>,
    pub k_2: Option<f64>,
    pub k_3: Option<f64>,
    pub energy: Option<f64>,
    pub l2: Option<f64>,
    pub sym_grad: Option<f64>,
    pub grad: Option<f64>,
    pub distance: Option<f64>,
    pub flux: Option<f64>,
    pub reference: Option<f64>,
    pub error: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub command: Command,
    pub config_hash: String,
    pub records: Vec<Record>,
    /// `(name, value)` lines of the summary.
    pub notes: Vec<(String, String)>,
    /// Additional `(file name, contents)` outputs.
    pub files: Vec<(String, String)>,
}

impl StudyReport {
    pub fn new(command: Command, cfg: &ExperimentConfig) -> Self {
        StudyReport {
            command,
            config_hash: config_hash(cfg),
            records: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Record stamped with the hash, version, command and regime.
    pub fn record(&self, cfg: &ExperimentConfig, key: impl Into<String>) -> Record {
        Record {
            config_hash: self.config_hash.clone(),
            version: VERSION.to_string(),
            command: self.command.name().to_string(),
            key: key.into(),
            regime: thinpore::geometry::Regime::from(cfg.medium.regime).name().to_string(),
            ..Default::default()
        }
    }

    pub fn note(&mut self, name: &str, value: impl ToString) {
        self.notes.push((name.to_string(), value.to_string()));
    }

    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        // header written by hand so that an empty report still has one
        w.write_record(HEADER)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command      {}", self.command.name());
        let _ = writeln!(s, "config_hash  {}", self.config_hash);
        let _ = writeln!(s, "version      {VERSION}");
        let _ = writeln!(s, "records      {}", self.records.len());
        let _ = writeln!(s, "converged    {}", self.all_converged());
        for (k, v) in &self.notes {
            let _ = writeln!(s, "{k:<12} {v}");
        }
        if !self.records.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{:<28} {:>5} {:>14} {:>14} {:>14} {:>14}",
                "key", "conv", "k_1", "k_2", "l2", "distance"
            );
            let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"));
            for r in &self.records {
                let _ = writeln!(
                    s,
                    "{:<28} {:>5} {:>14} {:>14} {:>14} {:>14}",
                    r.key,
                    r.converged,
                    cell(r.k_1),
                    cell(r.k_2),
                    cell(r.l2),
                    cell(r.distance)
                );
            }
        }
        s
    }

    /// Writes `report.csv`, `summary.txt` and the extra files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), self.to_csv()?)?;
        fs::write(dir.join("summary.txt"), self.summary())?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

const HEADER: [&str; 23] = [
    "config_hash",
    "version",
    "command",
    "key",
    "regime",
    "epsilon",
    "a_eps",
    "xi_1",
    "xi_2",
    "k_1",
    "k_2",
    "k_3",
    "energy",
    "l2",
    "sym_grad",
    "grad",
    "distance",
    "flux",
    "reference",
    "error",
    "iterations",
    "converged",
    "failure",
];
