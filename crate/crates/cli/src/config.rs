//! Run configuration read from one TOML file.
//!
//! Relative paths are resolved against the directory holding the config
//! file. See `config/run.example.toml` at the repository root for every key
//! with its default.

use std::fs;
use std::path::{Path, PathBuf};

use procpat_core::discovery::DiscoveryConfig;
use procpat_core::eval::{default_strategies, EvalConfig, Strategy, TreeConfig};
use procpat_core::log_model::LogSchema;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_PORT: u16 = 8765;
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 100 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogSource {
    pub path: PathBuf,
    pub schema: LogSchema,
}

impl Default for LogSource {
    fn default() -> Self {
        LogSource {
            path: PathBuf::from("log.csv"),
            schema: LogSchema::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub folds: usize,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub tree: TreeConfig,
    /// Equal-frequency classes for continuous outcomes.
    pub outcome_bins: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        let d = EvalConfig::default();
        EvalSettings {
            folds: d.folds,
            seed: d.seed,
            strategies: default_strategies(),
            tree: d.tree,
            outcome_bins: d.outcome_bins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSettings {
    pub host: String,
    pub port: u16,
    pub max_upload_bytes: usize,
    /// Directory that `POST /logs` may read logs from by relative path.
    pub logs_dir: Option<PathBuf>,
}

impl Default for ServerSettings {
    fn default() -> Self {
        ServerSettings {
            host: "127.0.0.1".into(),
            port: DEFAULT_PORT,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            logs_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub log: LogSource,
    pub discovery: DiscoveryConfig,
    pub eval: EvalSettings,
    pub output: OutputSettings,
    pub server: ServerSettings,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.discovery
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a config file and makes its relative paths absolute.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.log.path);
        join(&mut self.output.dir);
        if let Some(dir) = self.server.logs_dir.as_mut() {
            join(dir);
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            folds: self.eval.folds,
            seed: self.eval.seed,
            strategies: self.eval.strategies.clone(),
            tree: self.eval.tree,
            outcome_bins: self.eval.outcome_bins,
            discovery: self.discovery.clone(),
        }
    }
}
