//! Experiment runner behind the `fmlp` binary.

pub mod config;
pub mod experiment;
pub mod selfcheck;
pub mod summary;

pub use config::{Experiment, ExperimentConfig};
pub use experiment::{run_experiment, RunOutput};
pub use summary::{Record, Summary};

/// Failures surfaced to the command line, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<fmlp_core::Error> for CliError {
    fn from(e: fmlp_core::Error) -> Self {
        match e {
            fmlp_core::Error::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
