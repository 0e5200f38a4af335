//! Command-line front end: `bench`, `tune`, `train`, `forecast`, `compare`.
//!
//! Exit codes: 0 success, 1 runtime or data failure, 2 usage or config error.

mod commands;
mod config;
mod rundir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::data::DataError;

pub use commands::{
    bench, compare, forecast, forecast_rows, load_series, train, tune, BenchArgs, CompareArgs,
    ForecastArgs, ForecastRow, TrainArgs, TrainOutcome, TuneArgs, TuneOutcome,
};
pub use config::{
    DataConfig, DataSource, ManualConfig, Method, OptimizerConfig, RunConfig, SearchConfig,
    TrainConfig,
};
pub use rundir::{sha256_hex, RunDir};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
    #[error("best fitness {best:e} did not reach the tolerance {tolerance:e}")]
    NotConverged { best: f64, tolerance: f64 },
    #[error("{failed} of {total} methods failed")]
    PartialFailure { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "loadtune",
    version,
    about = "GRU load forecasting with metaheuristic hyperparameter tuning"
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Hourly CSV with the 19 documented columns.
    #[arg(long, global = true, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Use a generated series of this many hours instead of a CSV.
    #[arg(long, global = true, value_name = "HOURS")]
    pub synthetic: Option<usize>,
    /// Evaluate a generation's candidates on this many threads.
    #[arg(long, global = true, value_name = "THREADS")]
    pub parallel: Option<usize>,
    /// -v for info, -vv for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an optimizer on an analytic benchmark function.
    Bench(BenchCli),
    /// Search batch size, epochs and learning rate.
    Tune(TuneCli),
    /// Train a model with one trial and save it.
    Train(TrainCli),
    /// Write a 24-hour forecast from a saved model.
    Forecast(ForecastCli),
    /// Tune, train and evaluate several methods on the same data.
    Compare(CompareCli),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Optimizer {
    De,
    Ga,
    Pso,
}

#[derive(Debug, Args)]
pub struct BenchCli {
    #[arg(long = "opt", value_enum, default_value = "de")]
    pub optimizer: Optimizer,
    #[arg(long = "fn", default_value = "sphere")]
    pub function: String,
    #[arg(long, default_value_t = 5)]
    pub dims: usize,
    /// Generations (iterations for PSO).
    #[arg(long, default_value_t = 100)]
    pub gens: usize,
    #[arg(long, default_value_t = 20)]
    pub pop: usize,
    /// Stop once this many evaluations would be exceeded.
    #[arg(long)]
    pub evals: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    pub f_scale: f64,
    #[arg(long, default_value_t = 0.9)]
    pub cr: f64,
    /// Exit 0 only if the best value falls below this.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct TuneCli {
    #[arg(long = "opt", value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub gens: Option<usize>,
    /// Epoch ceiling during tuning; 0 disables it.
    #[arg(long)]
    pub epoch_cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainCli {
    /// Trial fragment written by `tune`.
    #[arg(long, value_name = "FILE")]
    pub trial: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ForecastCli {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Defaults to `scaler.txt` next to the model.
    #[arg(long, value_name = "FILE")]
    pub scaler: Option<PathBuf>,
    /// First forecast hour, e.g. `2017-03-01T00:00`.
    #[arg(long)]
    pub at: String,
}

#[derive(Debug, Args)]
pub struct CompareCli {
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "manual,de,ga,pso"
    )]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub gens: Option<usize>,
    #[arg(long)]
    pub epoch_cap: Option<usize>,
}

impl Cli {
    /// The config file (or defaults) with global flags applied.
    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        if self.data.is_some() && self.synthetic.is_some() {
            return Err(CliError::Usage(
                "pass either --data or --synthetic, not both".into(),
            ));
        }
        if let Some(path) = &self.data {
            cfg.data.csv = Some(path.clone());
            cfg.data.synthetic_hours = None;
        }
        if let Some(hours) = self.synthetic {
            cfg.data.synthetic_hours = Some(hours);
            cfg.data.csv = None;
        }
        if let Some(threads) = self.parallel {
            cfg.parallel = threads;
        }
        Ok(cfg)
    }
}

fn apply_search_overrides(
    cfg: &mut RunConfig,
    method: Option<Method>,
    pop: Option<usize>,
    gens: Option<usize>,
    epoch_cap: Option<usize>,
) {
    if let Some(m) = method {
        cfg.optimizer.method = m;
    }
    if let Some(p) = pop {
        cfg.optimizer.pop_size = p;
    }
    if let Some(g) = gens {
        cfg.optimizer.generations = g;
    }
    if let Some(c) = epoch_cap {
        cfg.search.tuning_epoch_cap = c;
    }
}

/// Parses nothing; dispatches an already parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = cli.run_config()?;
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match cli.command {
        Command::Bench(b) => {
            let out = bench(
                &cfg,
                &BenchArgs {
                    optimizer: b.optimizer,
                    function: b.function,
                    dims: b.dims,
                    generations: b.gens,
                    pop_size: b.pop,
                    max_evaluations: b.evals,
                    f_scale: b.f_scale,
                    cr: b.cr,
                    tolerance: b.tol,
                },
                &argv,
            )?;
            println!(
                "best {:e} after {} evaluations",
                out.best_fitness(),
                out.evaluations
            );
        }
        Command::Tune(t) => {
            apply_search_overrides(&mut cfg, t.method, t.pop, t.gens, t.epoch_cap);
            cfg.validate()?;
            let out = tune(&cfg, &TuneArgs::default(), &argv)?;
            println!(
                "best trial: batch_size={} epochs={} learning_rate={} (val mse {})",
                out.trial.batch_size, out.trial.epochs, out.trial.learning_rate, out.fitness
            );
        }
        Command::Train(t) => {
            cfg.validate()?;
            let args = TrainArgs {
                trial_file: t.trial,
                batch_size: t.batch_size,
                epochs: t.epochs,
                learning_rate: t.lr,
            };
            let out = train(&cfg, &args, &argv)?;
            println!(
                "final val mse {} test mape {:.4}% ({} windows)",
                out.report.final_val_mse(),
                out.test.mape,
                out.test.n_windows
            );
        }
        Command::Forecast(f) => {
            cfg.validate()?;
            let args = ForecastArgs {
                model: f.model,
                scaler: f.scaler,
                at: f.at,
            };
            let rows = forecast(&cfg, &args, &argv)?;
            println!("wrote {} forecast rows", rows.len());
        }
        Command::Compare(c) => {
            apply_search_overrides(&mut cfg, None, c.pop, c.gens, c.epoch_cap);
            cfg.validate()?;
            let table = compare(&cfg, &CompareArgs { methods: c.methods }, &argv)?;
            print!("{table}");
            if table.has_failures() {
                let failed = table
                    .rows
                    .iter()
                    .filter(|r| matches!(r, crate::metrics::ComparisonRow::Failed { .. }))
                    .count();
                return Err(CliError::PartialFailure {
                    failed,
                    total: table.rows.len(),
                });
            }
        }
    }
    Ok(())
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
