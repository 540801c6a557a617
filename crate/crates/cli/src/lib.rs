//! Experiment driver behind the `moeliga` binary: configuration files,
//! replicated runs, baseline comparisons and parameter sweeps.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{DatasetSource, ExperimentConfig, GridConfig};
pub use experiment::{cmd_compare, cmd_run, cmd_sweep};

/// Failure classes with distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    /// Configuration errors keep their key, prefixed by the config section.
    pub fn from_core(section: &str, e: moeliga_core::Error) -> Self {
        match e {
            moeliga_core::Error::Config { key, message } => {
                CliError::Config(format!("{section}.{key}: {message}"))
            }
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<moeliga_core::Error> for CliError {
    fn from(e: moeliga_core::Error) -> Self {
        CliError::from_core("run", e)
    }
}
