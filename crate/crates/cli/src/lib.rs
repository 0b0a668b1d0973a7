//! Configuration-driven experiment runner for the variational
//! thermodynamic integrators: trajectory simulation with CSV output,
//! comparison against the closed-form benchmark solution, regularity
//! reports, and numerical verification of the structure-preservation
//! identity.

pub mod commands;
pub mod config;

use thiserror::Error;

/// Errors mapped onto process exit codes: configuration problems exit with
/// 2, solver failures with 3, verification failures with 4, anything else
/// with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<varitherm::Error> for CliError {
    fn from(e: varitherm::Error) -> Self {
        match e {
            varitherm::Error::InvalidInput(_) => CliError::Config(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

pub use commands::{
    cmd_compare, cmd_regularity, cmd_simulate, cmd_verify_structure, CompareSummary,
    RegularityOutcome, SimulateSummary, StructureSummary, STRUCTURE_TOL,
};
pub use config::{preset, RunConfig};
