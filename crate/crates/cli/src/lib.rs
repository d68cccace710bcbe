//! Config-driven experiment runner.
//!
//! Each subcommand reads an [`ExperimentConfig`], runs its driver and
//! returns a [`StudyReport`] whose records carry the SHA-256 of the
//! canonical config.

pub mod config;
pub mod report;
pub mod runs;
pub mod study;

use std::io;

pub use config::{Command, ExperimentConfig, ForcingConfig};
pub use report::{config_hash, Record, StudyReport, VERSION};
pub use runs::{run_cell, run_darcy, run_single, run_sweep, run_verify};
pub use study::run_epsilon_study;

/// Process exit status for bad configs and invalid parameters.
pub const EXIT_VALIDATION: i32 = 2;
/// Process exit status when a mandatory solve did not converge.
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Parse(String),
    /// `field` is a dotted path into the config.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn validation(field: &str, reason: &str) -> Self {
        CliError::Validation {
            field: field.to_string(),
            reason: reason.to_string(),
        }
    }

    /// Core errors are parameter errors; `section` prefixes their field.
    pub fn from_core(section: &str, e: thinpore::Error) -> Self {
        match e {
            thinpore::Error::InvalidParameter { field, reason } => {
                CliError::validation(&format!("{section}.{field}"), &reason)
            }
            other => CliError::validation(section, &other.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation { .. } => EXIT_VALIDATION,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

/// Dispatches `command`.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<StudyReport, CliError> {
    match command {
        Command::Single => run_single(cfg),
        Command::Cell => run_cell(cfg),
        Command::Sweep => run_sweep(cfg),
        Command::Darcy => run_darcy(cfg),
        Command::EpsilonStudy => run_epsilon_study(cfg),
        Command::VerifyApriori => run_verify(cfg),
    }
}

/// Exit status for a finished run.
pub fn exit_code(report: &StudyReport) -> i32 {
    if report.all_converged() {
        0
    } else {
        EXIT_NONCONVERGENCE
    }
}
