use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use procpat_cli::commands::{self, DiscoverOptions, EvaluateOptions};
use procpat_cli::config::RunConfig;
use procpat_cli::{server, CliError};
use procpat_core::eval::Strategy;
use procpat_core::synth::PlantSpec;

#[derive(Parser)]
#[command(
    name = "procpat",
    version,
    about = "Multi-interest process pattern discovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover patterns and write the session history, fronts and features.
    Discover {
        config: PathBuf,
        /// Keep extending the whole front until a stop condition holds.
        #[arg(long)]
        auto: bool,
        /// Iteration limit, counting the singleton iteration.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate feature selection strategies.
    Evaluate {
        config: PathBuf,
        #[arg(long)]
        folds: Option<usize>,
        /// Comma separated, e.g. pareto,single:cc,single:oi,single:cd,all
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<String>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a log against its schema and print a JSON report.
    Validate { config: PathBuf },
    /// Write a synthetic log with a planted pattern plus a run config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// TOML plant spec; defaults apply to missing keys.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        traces: Option<usize>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        logs_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Discover {
            config,
            auto,
            iterations,
            seed,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let summary = commands::discover(
                &cfg,
                &DiscoverOptions {
                    auto,
                    iterations,
                    seed,
                    out,
                },
            )?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "{} iterations, {} discovered patterns",
                summary.iterations, summary.discovered
            );
            for f in &summary.files {
                println!("{}", f.display());
            }
        }
        Command::Evaluate {
            config,
            folds,
            strategies,
            seed,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let strategies = strategies
                .map(|v| {
                    v.iter()
                        .map(|s| s.parse::<Strategy>())
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let (report, files) = commands::evaluate(
                &cfg,
                &EvaluateOptions {
                    folds,
                    strategies,
                    seed,
                    out,
                },
            )?;
            for s in &report.strategies {
                eprintln!(
                    "{:<12} mean F1 {:.4} (min {:.4}, max {:.4}), {:.1} features",
                    s.strategy.to_string(),
                    s.mean_f1,
                    s.min_f1,
                    s.max_f1,
                    s.mean_features
                );
            }
            for f in &files {
                println!("{}", f.display());
            }
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            let (report, warnings) = commands::validate(&cfg)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Output(e.to_string()))?;
            println!("{text}");
        }
        Command::Synth {
            out,
            spec,
            seed,
            traces,
        } => {
            let mut plant = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                    toml::from_str::<PlantSpec>(&text)
                        .map_err(|e| CliError::Config(e.to_string()))?
                }
                None => PlantSpec::default(),
            };
            if let Some(s) = seed {
                plant.seed = s;
            }
            if let Some(n) = traces {
                plant.n_traces = n;
            }
            let truth = commands::synth(&plant, &out)?;
            eprintln!(
                "planted {} in {} traces",
                truth.key,
                truth.planted.values().filter(|&&p| p).count()
            );
            println!("{}", out.join("run.toml").display());
        }
        Command::Serve {
            config,
            host,
            port,
            logs_dir,
        } => {
            let mut settings = match config {
                Some(path) => RunConfig::load(&path)?.server,
                None => Default::default(),
            };
            if let Some(h) = host {
                settings.host = h;
            }
            if let Some(p) = port {
                settings.port = p;
            }
            if logs_dir.is_some() {
                settings.logs_dir = logs_dir;
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Output(e.to_string()))?;
            rt.block_on(server::serve(settings))
                .map_err(|e| CliError::Output(format!("server: {e}")))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
