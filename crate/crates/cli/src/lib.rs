//! Batch commands and the HTTP service around `procpat-core`.
//!
//! - [`config`]: the TOML run configuration.
//! - [`commands`]: `discover`, `evaluate`, `synth` and `validate`, each
//!   writing deterministic result files.
//! - [`server`]: the JSON API hosting interactive discovery sessions.

pub mod commands;
pub mod config;
pub mod server;

use procpat_core::discovery::DiscoveryError;
use procpat_core::eval::EvalError;
use procpat_core::log_model::LogError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    /// 1 for configuration problems, 2 for everything caused by the data
    /// or the filesystem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) | CliError::Output(_) => 2,
        }
    }
}

impl From<LogError> for CliError {
    fn from(e: LogError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DiscoveryError> for CliError {
    fn from(e: DiscoveryError) -> Self {
        match e {
            DiscoveryError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(_) | EvalError::UnknownStrategy(_) => CliError::Config(e.to_string()),
            EvalError::Discovery(d) => d.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}
