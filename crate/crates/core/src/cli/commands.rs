use std::fs;
use std::io::Write;
use std::path::PathBuf;

use chrono::NaiveDateTime;
use ndarray::{s, Array1, ArrayView2};
use serde::Deserialize;

use super::{CliError, ManualConfig, Method, Optimizer, RunConfig, RunDir};
use crate::data::{
    load_csv, prepare_dataset, select_features, window_starts, PreparedData, ScalerParams, Series,
    HORIZON, INPUT_LEN,
};
use crate::grunet::{self, GruModel, TrainError, TrainReport, TrialConfig};
use crate::metaheuristics::{
    de_optimize, ga_optimize, pso_optimize, Benchmark, BenchmarkFn, Candidate, DeConfig, GaConfig,
    GenerationStats, HistoryWriter, Objective, OptimizeError, OptimizeResult, PsoConfig,
    SearchSpace,
};
use crate::metrics::{self, ComparisonRow, ComparisonTable, EvalReport};
use crate::pipeline::{decode_trial, objective_from_pipeline};

const TIME_FORMAT: &str = "%Y-%m-%d %H:%M";

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Reads the configured CSV or generates the synthetic series, then selects
/// the configured features.
pub fn load_series(cfg: &RunConfig) -> Result<Series, CliError> {
    let records = match cfg.source()? {
        super::DataSource::Csv(path) => {
            let loaded = load_csv(&path)?;
            if !loaded.rejected.is_empty() {
                let first = &loaded.rejected[0];
                log::warn!(
                    "{} rows rejected from {}; first at line {}: {}",
                    loaded.rejected.len(),
                    path.display(),
                    first.line,
                    first.reason
                );
            }
            loaded.records
        }
        super::DataSource::Synthetic(spec) => spec.generate(),
    };
    log::info!("{} hourly records", records.len());
    Ok(select_features(&records, &cfg.features()?))
}

fn prepare(cfg: &RunConfig) -> Result<PreparedData, CliError> {
    let series = load_series(cfg)?;
    let data = prepare_dataset(&series, cfg.data.split)?;
    log::info!(
        "windows: {} train, {} val, {} test",
        data.train.len(),
        data.val.len(),
        data.test.len()
    );
    Ok(data)
}

/// Runs `optimizer` with history rows streamed to `history`.
fn optimize<O: Objective + ?Sized>(
    optimizer: Optimizer,
    space: &SearchSpace,
    objective: &O,
    de: &DeConfig,
    ga: &GaConfig,
    pso: &PsoConfig,
    history: impl Write,
) -> Result<OptimizeResult, CliError> {
    let mut writer = HistoryWriter::new(history).map_err(runtime)?;
    let mut write_err = None;
    let on_generation = |row: &GenerationStats, _: &[Candidate]| {
        log::info!(
            "generation {}: best {:e}, mean {:e}, {} evaluations",
            row.generation,
            row.best_fitness,
            row.mean_fitness,
            row.evaluations
        );
        if write_err.is_none() {
            if let Err(e) = writer.write(row) {
                write_err = Some(e);
            }
        }
    };
    let result = match optimizer {
        Optimizer::De => de_optimize(space, objective, de, on_generation),
        Optimizer::Ga => ga_optimize(space, objective, ga, on_generation),
        Optimizer::Pso => pso_optimize(space, objective, pso, on_generation),
    };
    let result = result.map_err(|e| match e {
        OptimizeError::InvalidConfig(_) | OptimizeError::PopulationTooSmall { .. } => {
            CliError::Config(vec![e.to_string()])
        }
        other => runtime(other),
    })?;
    if let Some(e) = write_err {
        return Err(runtime(e));
    }
    writer.finish().map_err(runtime)?;
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub optimizer: Optimizer,
    pub function: String,
    pub dims: usize,
    pub generations: usize,
    pub pop_size: usize,
    pub max_evaluations: Option<usize>,
    pub f_scale: f64,
    pub cr: f64,
    pub tolerance: f64,
}

/// Optimizes a benchmark function. Fails with `NotConverged` when the best
/// value stays at or above the tolerance.
pub fn bench(
    cfg: &RunConfig,
    args: &BenchArgs,
    argv: &[String],
) -> Result<OptimizeResult, CliError> {
    let function: BenchmarkFn = args.function.parse().map_err(|_| {
        CliError::Usage(format!(
            "unknown function `{}` (expected sphere, rastrigin or rosenbrock)",
            args.function
        ))
    })?;
    if args.dims == 0 {
        return Err(CliError::Usage("--dims must be at least 1".into()));
    }
    let objective = Benchmark {
        function,
        dims: args.dims,
    };
    let space = objective.search_space().map_err(runtime)?;
    let evaluation = cfg.evaluation();
    let de = DeConfig {
        f_scale: args.f_scale,
        cr: args.cr,
        pop_size: args.pop_size,
        max_generations: args.generations,
        max_evaluations: args.max_evaluations,
        seed: cfg.seed,
        evaluation,
    };
    let ga = GaConfig {
        pop_size: args.pop_size,
        max_generations: args.generations,
        max_evaluations: args.max_evaluations,
        seed: cfg.seed,
        evaluation,
        ..GaConfig::default()
    };
    let pso = PsoConfig {
        swarm_size: args.pop_size,
        max_iterations: args.generations,
        max_evaluations: args.max_evaluations,
        seed: cfg.seed,
        evaluation,
        ..PsoConfig::default()
    };

    let mut dir = RunDir::create(&cfg.out_dir)?;
    let history = dir.open("history.csv")?;
    let result = optimize(args.optimizer, &space, &objective, &de, &ga, &pso, history)?;
    let summary = format!(
        "function = {function}\ndims = {}\noptimizer = {:?}\nbest_fitness = {:e}\nevaluations = {}\nbest = {:?}\n",
        args.dims,
        args.optimizer,
        result.best_fitness(),
        result.evaluations,
        result.best.genes
    );
    dir.write("summary.txt", summary)?;
    dir.finish("bench", argv, cfg)?;

    if result.best_fitness() < args.tolerance {
        Ok(result)
    } else {
        Err(CliError::NotConverged {
            best: result.best_fitness(),
            tolerance: args.tolerance,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub method: Method,
    /// Decoded best candidate, without the tuning epoch cap.
    pub trial: TrialConfig,
    /// Validation MSE of the best candidate; NaN for `manual`.
    pub fitness: f64,
    pub result: Option<OptimizeResult>,
}

/// Args for `tune` beyond the run config; currently none.
#[derive(Debug, Clone, Default)]
pub struct TuneArgs {}

fn trial_fragment(t: &TrialConfig, method: Method, fitness: f64) -> String {
    format!(
        "# best trial from `{method}` tuning, validation mse {fitness}\n[manual]\nbatch_size = {}\nepochs = {}\nlearning_rate = {:?}\n",
        t.batch_size, t.epochs, t.learning_rate
    )
}

fn tune_in(
    cfg: &RunConfig,
    data: &PreparedData,
    dir: &mut RunDir,
    prefix: &str,
) -> Result<TuneOutcome, CliError> {
    let method = cfg.optimizer.method;
    let optimizer = match method {
        Method::Manual => {
            let trial = cfg.manual_trial()?;
            dir.write(
                &format!("{prefix}best_trial.toml"),
                trial_fragment(&trial, method, f64::NAN),
            )?;
            return Ok(TuneOutcome {
                method,
                trial,
                fitness: f64::NAN,
                result: None,
            });
        }
        Method::De => Optimizer::De,
        Method::Ga => Optimizer::Ga,
        Method::Pso => Optimizer::Pso,
    };
    let space = cfg.search_space()?;
    let objective = objective_from_pipeline(&data.train, &data.val, space.clone(), cfg.seed)
        .map_err(runtime)?
        .with_epoch_cap(cfg.tuning_epoch_cap());
    let history = dir.open(&format!("{prefix}history.csv"))?;
    let result = optimize(
        optimizer,
        &space,
        &objective,
        &cfg.de_config(),
        &cfg.ga_config(),
        &cfg.pso_config(),
        history,
    )?;
    let trial = decode_trial(&space, &result.best.genes).map_err(runtime)?;
    let fitness = result.best_fitness();
    dir.write(
        &format!("{prefix}best_trial.toml"),
        trial_fragment(&trial, method, fitness),
    )?;
    Ok(TuneOutcome {
        method,
        trial,
        fitness,
        result: Some(result),
    })
}

/// Searches the hyperparameters with the configured method. Writes
/// `history.csv` (streamed) and `best_trial.toml`.
pub fn tune(cfg: &RunConfig, _args: &TuneArgs, argv: &[String]) -> Result<TuneOutcome, CliError> {
    cfg.validate()?;
    let data = prepare(cfg)?;
    let mut dir = RunDir::create(&cfg.out_dir)?;
    let out = tune_in(cfg, &data, &mut dir, "")?;
    dir.finish("tune", argv, cfg)?;
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    pub trial_file: Option<PathBuf>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trial: TrialConfig,
    pub report: TrainReport,
    pub test: EvalReport,
    pub model_path: PathBuf,
}

#[derive(Deserialize)]
struct TrialFile {
    manual: ManualConfig,
}

fn resolve_trial(cfg: &RunConfig, args: &TrainArgs) -> Result<TrialConfig, CliError> {
    let mut cfg = cfg.clone();
    if let Some(path) = &args.trial_file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read trial {}: {e}", path.display())))?;
        let file: TrialFile = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("trial {}: {e}", path.display())))?;
        cfg.manual = file.manual;
    }
    let mut trial = cfg.manual_trial()?;
    if let Some(b) = args.batch_size {
        trial.batch_size = b;
    }
    if let Some(e) = args.epochs {
        trial.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        trial.learning_rate = lr;
    }
    trial
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(trial)
}

fn write_report(dir: &mut RunDir, name: &str, report: &TrainReport) -> Result<(), CliError> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(runtime)?;
    dir.write(name, buf)?;
    Ok(())
}

fn train_in(
    cfg: &RunConfig,
    data: &PreparedData,
    mut trial: TrialConfig,
    label: &str,
    dir: &mut RunDir,
    prefix: &str,
) -> Result<TrainOutcome, CliError> {
    if let Some(cap) = cfg.final_epoch_cap() {
        if trial.epochs > cap {
            log::info!(
                "final training capped at {cap} epochs (trial asked for {})",
                trial.epochs
            );
            trial.epochs = cap;
        }
    }
    let report_name = format!("{prefix}train_report.csv");
    let (model, report) = match grunet::train(&data.train, &data.val, &trial, cfg.seed) {
        Ok(ok) => ok,
        Err(TrainError::Diverged { epoch, report }) => {
            write_report(dir, &report_name, &report)?;
            return Err(CliError::Runtime(format!(
                "training diverged in epoch {epoch}; partial report kept in {}",
                dir.path(&report_name).display()
            )));
        }
        Err(e) => return Err(runtime(e)),
    };
    write_report(dir, &report_name, &report)?;
    let model_path = dir.write(&format!("{prefix}model.txt"), model.to_text())?;
    dir.write(&format!("{prefix}scaler.txt"), data.scaler.to_text())?;
    let test = metrics::evaluate(label, &model, &data.test, &data.scaler).map_err(runtime)?;
    let mut buf = Vec::new();
    metrics::comparison_table(std::slice::from_ref(&test))
        .write_csv(&mut buf)
        .map_err(runtime)?;
    dir.write(&format!("{prefix}evaluation.csv"), buf)?;
    Ok(TrainOutcome {
        trial,
        report,
        test,
        model_path,
    })
}

/// Trains on the training split and evaluates on the test split. Writes
/// `model.txt`, `scaler.txt`, `train_report.csv` and `evaluation.csv`.
pub fn train(cfg: &RunConfig, args: &TrainArgs, argv: &[String]) -> Result<TrainOutcome, CliError> {
    cfg.validate()?;
    let trial = resolve_trial(cfg, args)?;
    let data = prepare(cfg)?;
    let mut dir = RunDir::create(&cfg.out_dir)?;
    let result = train_in(cfg, &data, trial, "trained", &mut dir, "");
    dir.finish("train", argv, cfg)?;
    result
}

#[derive(Debug, Clone)]
pub struct ForecastArgs {
    pub model: PathBuf,
    pub scaler: Option<PathBuf>,
    pub at: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastRow {
    pub timestamp: NaiveDateTime,
    pub actual_kw: f64,
    pub predicted_kw: f64,
}

fn parse_timestamp(s: &str) -> Result<NaiveDateTime, CliError> {
    let s = s.trim();
    [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ]
    .iter()
    .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
    .ok_or_else(|| {
        CliError::Usage(format!(
            "cannot parse timestamp `{s}` (use YYYY-MM-DDTHH:MM)"
        ))
    })
}

/// The 24 hours starting at `at`, predicted from the three hours before it.
/// `predict` maps a scaled `[3, features]` window to scaled targets.
pub fn forecast_rows(
    series: &Series,
    scaler: &ScalerParams,
    at: NaiveDateTime,
    predict: impl Fn(&ArrayView2<f64>) -> Result<Array1<f64>, CliError>,
) -> Result<Vec<ForecastRow>, CliError> {
    let starts = window_starts(&series.timestamps, INPUT_LEN, HORIZON)?;
    let earliest = series.timestamps[starts[0] + INPUT_LEN];
    let start = series
        .timestamps
        .binary_search(&at)
        .ok()
        .and_then(|i| i.checked_sub(INPUT_LEN))
        .filter(|s0| starts.binary_search(s0).is_ok())
        .ok_or_else(|| {
            CliError::Runtime(format!(
                "no complete window (3 hours before, 24 after) for {}; the earliest valid timestamp is {}",
                at.format(TIME_FORMAT),
                earliest.format(TIME_FORMAT)
            ))
        })?;
    let inputs = series.features.slice(s![start..start + INPUT_LEN, ..]);
    let scaled = scaler.scale(&inputs);
    let predicted = predict(&scaled.view())?;
    Ok((0..HORIZON)
        .map(|h| {
            let t = start + INPUT_LEN + h;
            ForecastRow {
                timestamp: series.timestamps[t],
                actual_kw: series.demand[t],
                predicted_kw: scaler.inverse_target(predicted[h]),
            }
        })
        .collect())
}

/// Writes `forecast.csv` with `timestamp,actual_kw,predicted_kw`.
pub fn forecast(
    cfg: &RunConfig,
    args: &ForecastArgs,
    argv: &[String],
) -> Result<Vec<ForecastRow>, CliError> {
    let at = parse_timestamp(&args.at)?;
    let read = |p: &PathBuf| {
        fs::read_to_string(p)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", p.display())))
    };
    let model = GruModel::from_text(&read(&args.model)?).map_err(runtime)?;
    let scaler_path = args
        .scaler
        .clone()
        .unwrap_or_else(|| args.model.with_file_name("scaler.txt"));
    let scaler = ScalerParams::from_text(&read(&scaler_path)?)?;
    let series = load_series(cfg)?;
    if scaler.width() != series.features.ncols() {
        return Err(CliError::Runtime(format!(
            "scaler has {} columns but the data has {} features",
            scaler.width(),
            series.features.ncols()
        )));
    }
    let rows = forecast_rows(&series, &scaler, at, |w| model.forward(w).map_err(runtime))?;

    let mut dir = RunDir::create(&cfg.out_dir)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["timestamp", "actual_kw", "predicted_kw"])
        .map_err(runtime)?;
    for r in &rows {
        w.write_record([
            r.timestamp.format(TIME_FORMAT).to_string(),
            r.actual_kw.to_string(),
            r.predicted_kw.to_string(),
        ])
        .map_err(runtime)?;
    }
    dir.write("forecast.csv", w.into_inner().map_err(runtime)?)?;
    dir.finish("forecast", argv, cfg)?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct CompareArgs {
    pub methods: Vec<Method>,
}

/// Tune, train and test each method on the same data and seed. A failing
/// method becomes a failed row; the others still run.
pub fn compare(
    cfg: &RunConfig,
    args: &CompareArgs,
    argv: &[String],
) -> Result<ComparisonTable, CliError> {
    if args.methods.is_empty() {
        return Err(CliError::Usage("compare needs at least one method".into()));
    }
    cfg.validate()?;
    let data = prepare(cfg)?;
    let mut dir = RunDir::create(&cfg.out_dir)?;
    let mut rows = Vec::new();
    for &method in &args.methods {
        let mut c = cfg.clone();
        c.optimizer.method = method;
        let prefix = format!("{method}/");
        let outcome = tune_in(&c, &data, &mut dir, &prefix)
            .and_then(|t| train_in(&c, &data, t.trial, method.name(), &mut dir, &prefix));
        rows.push(match outcome {
            Ok(o) => {
                log::info!("{method}: test mape {:.4}% with {:?}", o.test.mape, o.trial);
                ComparisonRow::Ok(o.test)
            }
            Err(e) => {
                log::warn!("{method} failed: {e}");
                ComparisonRow::Failed {
                    method: method.name().to_string(),
                    reason: e.to_string(),
                }
            }
        });
    }
    let table = ComparisonTable::new(rows);
    let mut buf = Vec::new();
    table.write_csv(&mut buf).map_err(runtime)?;
    dir.write("comparison.csv", buf)?;
    dir.write("comparison.txt", table.to_string())?;
    dir.finish("compare", argv, cfg)?;
    Ok(table)
}
