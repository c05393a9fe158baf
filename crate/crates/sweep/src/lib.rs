//! Batch sweep harness: reads a configuration, sweeps channel loss, runs
//! separate and global decoy-state estimation for BB84 or MDI-QKD, and
//! emits figure-ready CSV plus a JSON summary.

use std::fmt;

pub mod config;
pub mod report;
pub mod sweep;

pub use config::{Protocol, SweepConfig};
pub use report::{write_report, Summary};
pub use sweep::{run_sweep, SweepRow};

/// Failure classes with distinct process exit codes: configuration
/// problems exit 2, input/output problems exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}
