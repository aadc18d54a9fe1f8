//! Batch commands. Every output is a pure function of the config, the log
//! and the command options, so repeated runs write identical bytes.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use procpat_core::discovery::{DiscoverySession, SessionStatus};
use procpat_core::eval::{cross_validate, frequency_encode, EvalReport, Strategy};
use procpat_core::interest::{InterestVector, MeasureFlags};
use procpat_core::log_model::{
    read_event_log, validate_log, write_event_log, EventLog, OutcomeValue, ValidationReport,
};
use procpat_core::patterns::{PatternJson, DEFAULT_MAX_INSTANCES_PER_TRACE};
use procpat_core::synth::{generate, GroundTruth, PlantSpec};
use serde::{Deserialize, Serialize};

use crate::config::{LogSource, RunConfig};
use crate::CliError;

pub const SESSION_FILE: &str = "session_history.json";
pub const PATTERNS_FILE: &str = "discovered_patterns.json";
pub const FRONTS_FILE: &str = "fronts.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const REPORT_JSON: &str = "eval_report.json";
pub const REPORT_CSV: &str = "eval_report.csv";
pub const SUMMARY_CSV: &str = "eval_summary.csv";

pub fn load_log(source: &LogSource) -> Result<(EventLog, Vec<String>), CliError> {
    let file = File::open(&source.path)
        .map_err(|e| CliError::Data(format!("cannot open log {}: {e}", source.path.display())))?;
    let (log, warnings) = read_event_log(BufReader::new(file), &source.schema)?;
    let warnings = warnings
        .into_iter()
        .map(|w| format!("{}: {}", w.case_id, w.message))
        .collect();
    Ok((log, warnings))
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| output_error(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| output_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| output_error(path, e))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let header: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    let bytes = csv_bytes(&header, rows).map_err(|e| output_error(path, e))?;
    write_file(path, &bytes)
}

/// One entry of the discovered-pattern export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveredPattern {
    /// First iteration whose front holds the pattern.
    pub iteration: usize,
    pub pattern: PatternJson,
    pub interest: InterestVector,
    pub case_count: usize,
    pub flags: MeasureFlags,
}

pub fn discovered(session: &DiscoverySession) -> Vec<DiscoveredPattern> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for it in session.iterations() {
        for m in it.front_members() {
            if seen.insert(m.pattern.key().to_string()) {
                out.push(DiscoveredPattern {
                    iteration: it.index,
                    pattern: PatternJson::from(m.pattern.clone()),
                    interest: m.interest,
                    case_count: m.case_count,
                    flags: m.flags,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct DiscoverOptions {
    pub auto: bool,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct DiscoverSummary {
    pub iterations: usize,
    pub discovered: usize,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Runs discovery and writes the session history, the discovered patterns,
/// the per-iteration fronts and the feature matrix of the discovered set.
/// Without `auto` only iteration 0 is computed.
pub fn discover(cfg: &RunConfig, opts: &DiscoverOptions) -> Result<DiscoverSummary, CliError> {
    let mut dcfg = cfg.discovery.clone();
    if let Some(n) = opts.iterations {
        dcfg.max_iterations = n;
    }
    if let Some(s) = opts.seed {
        dcfg.seed = s;
    }
    dcfg.validate()?;
    let (log, warnings) = load_log(&cfg.log)?;
    let log = Arc::new(log);
    let mut session = DiscoverySession::new(log.clone(), dcfg)?;
    if opts.auto {
        session.run_auto()?;
    } else {
        session.finish();
    }
    debug_assert_eq!(session.status(), SessionStatus::Done);

    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let patterns = discovered(&session);
    let files: Vec<PathBuf> = [SESSION_FILE, PATTERNS_FILE, FRONTS_FILE, FEATURES_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect();

    let mut history = session.to_json();
    history.push('\n');
    write_file(&files[0], history.as_bytes())?;
    write_json(&files[1], &patterns)?;

    let mut rows = Vec::new();
    for it in session.iterations() {
        for (rank, m) in it.front_members().into_iter().enumerate() {
            rows.push(vec![
                it.index.to_string(),
                rank.to_string(),
                m.pattern.id().to_string(),
                m.pattern.len().to_string(),
                m.case_count.to_string(),
                m.interest.cc.to_string(),
                m.interest.oi.to_string(),
                m.interest.cd.to_string(),
                m.pattern.key().to_string(),
            ]);
        }
    }
    write_csv(
        &files[2],
        &[
            "iteration",
            "rank",
            "pattern_id",
            "size",
            "case_count",
            "cc",
            "oi",
            "cd",
            "key",
        ],
        &rows,
    )?;

    let cap = session
        .config()
        .measure
        .max_instances_per_trace
        .unwrap_or(DEFAULT_MAX_INSTANCES_PER_TRACE);
    let front_patterns: Vec<_> = session
        .discovered_patterns()
        .into_iter()
        .map(|m| m.pattern)
        .collect();
    let x = frequency_encode(&front_patterns, session.polog(), cap)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let mut header = vec!["case_id".to_string(), "outcome".to_string()];
    header.extend(x.features().iter().map(|id| id.to_string()));
    let rows: Vec<Vec<String>> = log
        .traces()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut r = vec![t.case_id.clone(), outcome_text(t.outcome.as_ref())];
            r.extend(x.row(i).iter().map(|c| c.to_string()));
            r
        })
        .collect();
    let bytes = csv_bytes(&header, &rows).map_err(|e| output_error(&files[3], e))?;
    write_file(&files[3], &bytes)?;

    Ok(DiscoverSummary {
        iterations: session.iterations().len(),
        discovered: patterns.len(),
        warnings,
        files,
    })
}

fn outcome_text(o: Option<&OutcomeValue>) -> String {
    match o {
        Some(OutcomeValue::Categorical(s)) => s.clone(),
        Some(OutcomeValue::Continuous(v)) => v.to_string(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvaluateOptions {
    pub folds: Option<usize>,
    pub strategies: Option<Vec<Strategy>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Cross-validates the configured strategies and writes the report as
/// JSON, a per-fold CSV table and a per-strategy summary CSV.
pub fn evaluate(
    cfg: &RunConfig,
    opts: &EvaluateOptions,
) -> Result<(EvalReport, Vec<PathBuf>), CliError> {
    let mut ecfg = cfg.eval_config();
    if let Some(k) = opts.folds {
        ecfg.folds = k;
    }
    if let Some(s) = &opts.strategies {
        ecfg.strategies = s.clone();
    }
    if let Some(seed) = opts.seed {
        ecfg.seed = seed;
        ecfg.discovery.seed = seed;
    }
    ecfg.discovery.validate()?;
    if ecfg.folds < 2 {
        return Err(CliError::Config("folds must be at least 2".into()));
    }
    let (log, _) = load_log(&cfg.log)?;
    let report = cross_validate(&log, &ecfg)?;

    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let files = vec![
        dir.join(REPORT_JSON),
        dir.join(REPORT_CSV),
        dir.join(SUMMARY_CSV),
    ];
    write_json(&files[0], &report)?;

    let mut rows = Vec::new();
    for s in &report.strategies {
        for (fold, (f1, n)) in s.fold_f1.iter().zip(&s.fold_features).enumerate() {
            rows.push(vec![
                s.strategy.to_string(),
                fold.to_string(),
                f1.to_string(),
                n.to_string(),
            ]);
        }
    }
    write_csv(&files[1], &["strategy", "fold", "f1", "features"], &rows)?;

    let rows: Vec<Vec<String>> = report
        .strategies
        .iter()
        .map(|s| {
            vec![
                s.strategy.to_string(),
                s.mean_f1.to_string(),
                s.min_f1.to_string(),
                s.max_f1.to_string(),
                s.std_f1.to_string(),
                s.mean_features.to_string(),
            ]
        })
        .collect();
    write_csv(
        &files[2],
        &[
            "strategy",
            "mean_f1",
            "min_f1",
            "max_f1",
            "std_f1",
            "mean_features",
        ],
        &rows,
    )?;
    Ok((report, files))
}

pub fn validate(cfg: &RunConfig) -> Result<(ValidationReport, Vec<String>), CliError> {
    let (log, warnings) = load_log(&cfg.log)?;
    Ok((validate_log(&log), warnings))
}

/// Writes a planted synthetic log, its ground truth and a run config
/// pointing at it into `dir`.
pub fn synth(spec: &PlantSpec, dir: &Path) -> Result<GroundTruth, CliError> {
    let (log, truth) = generate(spec).map_err(|e| CliError::Config(e.to_string()))?;
    let log_path = dir.join("log.csv");
    fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    let file = File::create(&log_path).map_err(|e| output_error(&log_path, e))?;
    let mut w = BufWriter::new(file);
    write_event_log(&log, &mut w).map_err(|e| output_error(&log_path, e))?;
    w.flush().map_err(|e| output_error(&log_path, e))?;
    write_json(&dir.join("ground_truth.json"), &truth)?;

    let cfg = RunConfig {
        log: LogSource {
            path: PathBuf::from("log.csv"),
            schema: spec.schema(),
        },
        ..RunConfig::default()
    };
    let text = toml::to_string(&cfg).map_err(|e| output_error(dir, e))?;
    write_file(&dir.join("run.toml"), text.as_bytes())?;
    Ok(truth)
}
