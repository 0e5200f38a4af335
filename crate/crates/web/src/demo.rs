use loadtune::data::{prepare_dataset, select_features, FeatureSet, SplitRatios, SyntheticSpec};
use loadtune::grunet::{train_from, GruModel, GruShape, TrialConfig};
use loadtune::metaheuristics::{
    de_optimize, ga_optimize, pso_optimize, seeded_rng, Benchmark, BenchmarkFn, Candidate,
    DeConfig, GaConfig, GenerationStats, PsoConfig,
};
use loadtune::metrics;
use serde::Serialize;

/// Hidden width used in the browser; smaller than the CLI's 64 to keep
/// training interactive.
pub const DEMO_HIDDEN: usize = 16;

#[derive(Serialize)]
pub struct OptimizerRun {
    pub method: String,
    pub function: String,
    pub bounds: [f64; 2],
    pub history: Vec<GenerationStats>,
    /// Member positions after each generation, generation 0 first.
    pub frames: Vec<Vec<[f64; 2]>>,
    pub best: [f64; 2],
    pub best_fitness: f64,
    pub evaluations: usize,
}

fn benchmark(function: &str) -> Result<BenchmarkFn, String> {
    function
        .parse()
        .map_err(|_| format!("unknown function `{function}`"))
}

pub fn run_optimizer(
    method: &str,
    function: &str,
    generations: usize,
    pop_size: usize,
    seed: u64,
) -> Result<String, String> {
    let f = benchmark(function)?;
    let objective = Benchmark {
        function: f,
        dims: 2,
    };
    let space = objective.search_space().map_err(|e| e.to_string())?;
    let mut history = Vec::new();
    let mut frames = Vec::new();
    let record = |row: &GenerationStats, pop: &[Candidate]| {
        history.push(*row);
        frames.push(pop.iter().map(|c| [c.genes[0], c.genes[1]]).collect());
    };
    let result = match method {
        "de" => de_optimize(
            &space,
            &objective,
            &DeConfig {
                pop_size,
                max_generations: generations,
                seed,
                ..DeConfig::default()
            },
            record,
        ),
        "ga" => ga_optimize(
            &space,
            &objective,
            &GaConfig {
                pop_size,
                max_generations: generations,
                seed,
                ..GaConfig::default()
            },
            record,
        ),
        "pso" => pso_optimize(
            &space,
            &objective,
            &PsoConfig {
                swarm_size: pop_size,
                max_iterations: generations,
                seed,
                ..PsoConfig::default()
            },
            record,
        ),
        other => return Err(format!("unknown optimizer `{other}`")),
    }
    .map_err(|e| e.to_string())?;
    let (lo, hi) = f.default_bounds();
    let run = OptimizerRun {
        method: method.to_string(),
        function: f.name().to_string(),
        bounds: [lo, hi],
        history,
        frames,
        best: [result.best.genes[0], result.best.genes[1]],
        best_fitness: result.best_fitness(),
        evaluations: result.evaluations,
    };
    serde_json::to_string(&run).map_err(|e| e.to_string())
}

#[derive(Serialize)]
pub struct Landscape {
    pub function: String,
    pub bounds: [f64; 2],
    pub resolution: usize,
    /// Row-major, row 0 at the lower bound of y.
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn landscape(function: &str, resolution: usize) -> Result<String, String> {
    if !(2..=400).contains(&resolution) {
        return Err(format!("resolution must be in 2..=400, got {resolution}"));
    }
    let f = benchmark(function)?;
    let (lo, hi) = f.default_bounds();
    let step = (hi - lo) / (resolution - 1) as f64;
    let values: Vec<f64> = (0..resolution * resolution)
        .map(|k| {
            let (i, j) = (k / resolution, k % resolution);
            (1.0 + f.value(&[lo + j as f64 * step, lo + i as f64 * step])).log10()
        })
        .collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    serde_json::to_string(&Landscape {
        function: f.name().to_string(),
        bounds: [lo, hi],
        resolution,
        values,
        min,
        max,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
pub struct ForecastDemo {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
    pub test_mape: f64,
    /// First test window: hour labels, actual and predicted kW.
    pub hours: Vec<String>,
    pub actual_kw: Vec<f64>,
    pub predicted_kw: Vec<f64>,
}

pub fn forecast_demo(
    hours: usize,
    batch_size: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<String, String> {
    if !(200..=20_000).contains(&hours) {
        return Err(format!("hours must be in 200..=20000, got {hours}"));
    }
    let records = SyntheticSpec {
        hours,
        seed,
        ..SyntheticSpec::default()
    }
    .generate();
    let series = select_features(&records, &FeatureSet::default());
    let data = prepare_dataset(&series, SplitRatios::default()).map_err(|e| e.to_string())?;
    let (_, steps, input) = data.train.x.dim();
    let shape = GruShape {
        steps,
        input,
        hidden: DEMO_HIDDEN,
        output: data.train.y.ncols(),
    };
    let mut rng = seeded_rng(seed);
    let model = GruModel::init(shape, &mut rng);
    let trial = TrialConfig {
        batch_size,
        epochs,
        learning_rate,
    };
    let (model, report) =
        train_from(model, &data.train, &data.val, &trial, &mut rng).map_err(|e| e.to_string())?;
    let eval =
        metrics::evaluate("demo", &model, &data.test, &data.scaler).map_err(|e| e.to_string())?;

    let x0 = data.test.x.outer_iter().next().ok_or("empty test split")?;
    let pred = model.forward(&x0).map_err(|e| e.to_string())?;
    let start = data.test.starts[0] + loadtune::data::INPUT_LEN;
    let out = ForecastDemo {
        train_mse: report.epochs.iter().map(|e| e.train_mse).collect(),
        val_mse: report.epochs.iter().map(|e| e.val_mse).collect(),
        test_mape: eval.mape,
        hours: series.timestamps[start..start + pred.len()]
            .iter()
            .map(|t| t.format("%m-%d %H:00").to_string())
            .collect(),
        actual_kw: series.demand[start..start + pred.len()].to_vec(),
        predicted_kw: pred
            .iter()
            .map(|v| data.scaler.inverse_target(*v))
            .collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}
