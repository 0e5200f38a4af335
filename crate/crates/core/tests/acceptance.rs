//! Acceptance checks, one line of output per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the PASS/FAIL lines always
//! print. Positional arguments select criteria by number, e.g.
//! `cargo test --test acceptance -- 4 7`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::{s, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use loadtune::cli::{self, CompareArgs, Method, RunConfig, TuneArgs};
use loadtune::data::{
    fit_scaler, load_csv, prepare_dataset, select_features, synthesize_load, window_starts,
    DataError, FeatureSet, Split, SplitRatios, HORIZON, INPUT_LEN,
};
use loadtune::grunet::{loss_and_gradients, GruModel, GruShape};
use loadtune::metaheuristics::{
    benchmark_objective, de_optimize, de_optimize_with, ga_optimize, pso_optimize, DeConfig,
    GaConfig, PsoConfig, RandomSource, SearchSpace,
};
use loadtune::metrics::{self, mape, mse, ComparisonRow};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::*;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "DE operator oracle",
            limit: Duration::from_secs(1),
            run: de_oracle,
        },
        Criterion {
            id: 2,
            name: "DE convergence on sphere",
            limit: Duration::from_secs(5),
            run: de_convergence,
        },
        Criterion {
            id: 3,
            name: "GA and PSO convergence on sphere",
            limit: Duration::from_secs(10),
            run: ga_pso_convergence,
        },
        Criterion {
            id: 4,
            name: "BPTT gradient check",
            limit: Duration::from_secs(60),
            run: gradient_check,
        },
        Criterion {
            id: 5,
            name: "end-to-end manual vs DE on synthetic load",
            limit: Duration::from_secs(15 * 60),
            run: end_to_end,
        },
        Criterion {
            id: 6,
            name: "data pipeline invariants",
            limit: Duration::from_secs(1),
            run: data_invariants,
        },
        Criterion {
            id: 7,
            name: "metric oracle",
            limit: Duration::from_secs(1),
            run: metric_oracle,
        },
        Criterion {
            id: 8,
            name: "tune determinism",
            limit: Duration::from_secs(5 * 60),
            run: tune_determinism,
        },
        Criterion {
            id: 9,
            name: "real-data smoke",
            limit: Duration::from_secs(2 * 60),
            run: real_data,
        },
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();

    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| selected.is_empty() || selected.contains(&c.id))
    {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let (tag, detail) = match outcome {
            Pass(d) if took <= c.limit => ("PASS", d),
            Pass(d) => ("FAIL", format!("{d}; took {took:.1?}, limit {:?}", c.limit)),
            Fail(d) => ("FAIL", d),
            Skip(d) => ("SKIP", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!(
            "[{tag}] criterion {} {}: {detail} ({took:.2?})",
            c.id, c.name
        );
    }
    if std::env::var_os("LOADTUNE_REPORT_ALL").is_some()
        && (selected.is_empty() || selected.contains(&5))
    {
        all_methods_report();
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

/// Replays an index tape and a unit tape.
struct Tape {
    indices: Vec<usize>,
    units: Vec<f64>,
}

impl RandomSource for Tape {
    fn unit(&mut self) -> f64 {
        assert!(!self.units.is_empty(), "unit tape exhausted");
        self.units.remove(0)
    }

    fn index(&mut self, n: usize) -> usize {
        assert!(!self.indices.is_empty(), "index tape exhausted");
        let i = self.indices.remove(0);
        assert!(i < n, "tape index {i} out of range {n}");
        i
    }
}

fn de_oracle() -> Outcome {
    // f(x) = (x - 3)^2 on [0, 10], N = 4, F = 0.5, CR = 0.9, one generation.
    let space = SearchSpace::uniform(1, 0.0, 10.0).unwrap();
    let f = |x: &[f64]| (x[0] - 3.0) * (x[0] - 3.0);
    let cfg = DeConfig {
        f_scale: 0.5,
        cr: 0.9,
        pop_size: 4,
        max_generations: 1,
        ..DeConfig::default()
    };
    let mut tape = Tape {
        indices: vec![
            1, 2, 3, 0, // member 0: donors 1,2,3; forced gene 0
            1, 0, 2, 3, 0, // member 1: 1 is the target and is redrawn
            3, 0, 1, 0, // member 2
            0, 0, 1, 2, 0, // member 3: repeated 0 is redrawn
        ],
        units: vec![0.1, 0.5, 0.2, 0.9, 0.95, 0.3, 0.3, 0.3],
    };
    let res = de_optimize_with(&space, &f, &cfg, &mut tape, |_, _| {}).unwrap();

    // Initial x = 0 + u * 10 -> [1, 5, 2, 9], f = [4, 4, 1, 36].
    // m0: v = 5 + 0.5 (2 - 9) = 1.5, f 2.25 <= 4, replaced (forced gene despite u = 0.95)
    // m1: v = 1 + 0.5 (2 - 9) = -2.5 -> clamped 0, f 9 > 4, kept
    // m2: v = 9 + 0.5 (1 - 5) = 7, f 16 > 1, kept
    // m3: v = 1 + 0.5 (5 - 2) = 2.5, f 0.25 <= 36, replaced
    let expect = [(1.5, 2.25), (5.0, 4.0), (2.0, 1.0), (2.5, 0.25)];
    let got: Vec<(f64, f64)> = res
        .population
        .iter()
        .map(|c| (c.genes[0], c.fitness.unwrap()))
        .collect();
    let exact = got == expect
        && res.best.genes == [2.5]
        && res.evaluations == 8
        && tape.indices.is_empty()
        && tape.units.is_empty();
    check(
        exact,
        format!(
            "population {got:?}, best {:?}, {} evaluations",
            res.best.genes, res.evaluations
        ),
    )
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.1e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn sphere_setup() -> (SearchSpace, loadtune::metaheuristics::Benchmark) {
    (
        SearchSpace::uniform(5, -5.0, 5.0).unwrap(),
        benchmark_objective("sphere", 5).unwrap(),
    )
}

fn de_convergence() -> Outcome {
    let (space, sphere) = sphere_setup();
    let best: Vec<f64> = (0..5)
        .map(|seed| {
            let cfg = DeConfig {
                f_scale: 0.8,
                cr: 0.9,
                pop_size: 20,
                max_generations: 100,
                seed,
                ..DeConfig::default()
            };
            de_optimize(&space, &sphere, &cfg, |_, _| {})
                .unwrap()
                .best_fitness()
        })
        .collect();
    check(
        best.iter().all(|b| *b < 1e-6),
        format!("best per seed {}, need < 1e-6 on all", sci(&best)),
    )
}

fn ga_pso_convergence() -> Outcome {
    let (space, sphere) = sphere_setup();
    let mut ga_best = Vec::new();
    let mut pso_best = Vec::new();
    for seed in 0..5 {
        let ga = GaConfig {
            pop_size: 20,
            max_generations: 10_000,
            max_evaluations: Some(2000),
            seed,
            ..GaConfig::default()
        };
        let r = ga_optimize(&space, &sphere, &ga, |_, _| {}).unwrap();
        assert!(r.evaluations <= 2000);
        ga_best.push(r.best_fitness());
        let pso = PsoConfig {
            swarm_size: 20,
            max_iterations: 10_000,
            max_evaluations: Some(2000),
            seed,
            ..PsoConfig::default()
        };
        let r = pso_optimize(&space, &sphere, &pso, |_, _| {}).unwrap();
        assert!(r.evaluations <= 2000);
        pso_best.push(r.best_fitness());
    }
    let hits = |v: &[f64]| v.iter().filter(|b| **b < 1e-3).count();
    check(
        hits(&ga_best) >= 4 && hits(&pso_best) >= 4,
        format!(
            "GA {} ({}/5), PSO {} ({}/5)",
            sci(&ga_best),
            hits(&ga_best),
            sci(&pso_best),
            hits(&pso_best)
        ),
    )
}

/// Max relative error of analytic vs central-difference gradients over every
/// parameter of `model`.
fn max_grad_error(model: &GruModel, x: &Array3<f64>, y: &Array2<f64>) -> f64 {
    const EPS: f64 = 1e-5;
    let (_, grads) = loss_and_gradients(model, &x.view(), &y.view()).unwrap();
    let loss = |m: &GruModel| loss_and_gradients(m, &x.view(), &y.view()).unwrap().0;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (t, (_, analytic)) in grads.tensors().iter().enumerate() {
        for k in 0..analytic.len() {
            let orig = probe.tensors()[t].1[k];
            probe.tensors_mut()[t].1[k] = orig + EPS;
            let up = loss(&probe);
            probe.tensors_mut()[t].1[k] = orig - EPS;
            let down = loss(&probe);
            probe.tensors_mut()[t].1[k] = orig;
            let numeric = (up - down) / (2.0 * EPS);
            let a = analytic[k];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

/// A model with random weights and biases, inputs, and targets, redrawn while
/// any output pre-activation sits within `margin` of the ReLU kink.
fn gradient_draw(
    shape: GruShape,
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> (GruModel, Array3<f64>, Array2<f64>) {
    loop {
        let mut m = GruModel::init(shape, rng);
        for (_, t) in m.tensors_mut() {
            for v in t.iter_mut() {
                *v += rng.random_range(-0.3..0.3);
            }
        }
        let x = Array3::from_shape_fn((batch, shape.steps, shape.input), |_| {
            rng.random_range(-2.0..2.0)
        });
        let y = Array2::from_shape_fn((batch, shape.output), |_| rng.random_range(0.0..1.5));
        let pre = pre_activation(&m, &x);
        if pre.iter().all(|a| a.abs() > 1e-3) {
            return (m, x, y);
        }
    }
}

fn pre_activation(m: &GruModel, x: &Array3<f64>) -> Array2<f64> {
    let mut relu_free = m.clone();
    // shift the output bias past the kink so ReLU passes everything through
    let shift = 100.0;
    relu_free.b_out.mapv_inplace(|b| b + shift);
    relu_free.predict_batch(&x.view()).unwrap() - shift
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let small = GruShape {
        steps: 3,
        input: 4,
        hidden: 5,
        output: 6,
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (m, x, y) = gradient_draw(small, 4, &mut rng);
        worst = worst.max(max_grad_error(&m, &x, &y));
    }
    let (m, x, y) = gradient_draw(GruShape::default(), 2, &mut rng);
    let full = max_grad_error(&m, &x, &y);
    check(
        worst < 1e-4 && full < 1e-4,
        format!("max rel error {worst:.2e} over 100 draws (3x4->5->6), {full:.2e} at 3x8->64->24"),
    )
}

fn synthetic_config(hours: usize, seed: u64, out: PathBuf) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.data.synthetic_hours = Some(hours);
    cfg.seed = seed;
    cfg.out_dir = out;
    cfg
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut manual = Vec::new();
    let mut de = Vec::new();
    for seed in 0..3 {
        let mut cfg = synthetic_config(4000, seed, tmp.path().join(format!("seed{seed}")));
        cfg.optimizer.pop_size = 6;
        cfg.optimizer.generations = 5;
        cfg.search.tuning_epoch_cap = 30;
        let table = cli::compare(
            &cfg,
            &CompareArgs {
                methods: vec![Method::Manual, Method::De],
            },
            &[],
        )
        .unwrap();
        println!("    seed {seed}:");
        for line in table.to_string().lines() {
            println!("      {line}");
        }
        for row in &table.rows {
            match row {
                ComparisonRow::Ok(r) if r.method == "manual" => manual.push(r.mape),
                ComparisonRow::Ok(r) => de.push(r.mape),
                ComparisonRow::Failed { method, reason } => {
                    return Fail(format!("seed {seed}: {method} failed: {reason}"));
                }
            }
        }
    }
    let (m, d) = (median(manual.clone()), median(de.clone()));
    check(
        d <= m && de.iter().all(|v| *v < 5.0),
        format!(
            "median MAPE DE {d:.3}% vs manual {m:.3}%; DE per seed {de:.3?}, manual {manual:.3?}"
        ),
    )
}

/// Four-method table on seed 0 at the criterion 5 budget; printed, not gated.
fn all_methods_report() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = synthetic_config(4000, 0, tmp.path().to_path_buf());
    cfg.optimizer.pop_size = 6;
    cfg.optimizer.generations = 5;
    cfg.search.tuning_epoch_cap = 30;
    let methods = vec![Method::Manual, Method::De, Method::Ga, Method::Pso];
    let start = Instant::now();
    let table = cli::compare(&cfg, &CompareArgs { methods }, &[]).unwrap();
    println!(
        "[INFO] all methods on seed 0, not gated ({:.0?}):",
        start.elapsed()
    );
    for line in table.to_string().lines() {
        println!("      {line}");
    }
}

fn data_invariants() -> Outcome {
    let records = synthesize_load(200, 11);
    let series = select_features(&records, &FeatureSet::default());
    let data = prepare_dataset(&series, SplitRatios::default()).unwrap();
    let mut problems = Vec::new();

    // round trip on every row of the fixture
    let sc = &data.scaler;
    let back = sc.inverse_scale(&sc.scale(&series.features.view()).view());
    for (a, b) in back.iter().zip(series.features.iter()) {
        if (a - b).abs() > 1e-12 * b.abs().max(1.0) {
            problems.push(format!("round trip {b} -> {a}"));
            break;
        }
    }
    for v in &series.demand {
        if (sc.inverse_target(sc.scale_target(*v)) - v).abs() > 1e-12 * v.abs() {
            problems.push(format!("target round trip {v}"));
            break;
        }
    }

    // standardised training rows
    let first = data.train.starts[0];
    let last = *data.train.starts.last().unwrap() + INPUT_LEN + HORIZON;
    let train_rows = sc.scale(&series.features.slice(s![first..last, ..]));
    for (j, col) in train_rows.columns().into_iter().enumerate() {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let constant = sc.std[j] == 1.0 && col.iter().all(|v| *v == 0.0);
        if mean.abs() >= 1e-10 || (!constant && (std - 1.0).abs() >= 1e-10) {
            problems.push(format!("column {j}: mean {mean:e}, std {std}"));
        }
    }

    // alignment of every window in every split
    let starts = window_starts(&series.timestamps, INPUT_LEN, HORIZON).unwrap();
    if data.train.len() + data.val.len() + data.test.len() != starts.len() {
        problems.push("splits do not cover all windows".into());
    }
    for ds in [&data.train, &data.val, &data.test] {
        for (k, &s0) in ds.starts.iter().enumerate() {
            let last_input = series.timestamps[s0 + INPUT_LEN - 1];
            if ds.origins[k] - last_input != chrono::Duration::hours(1) {
                problems.push(format!("{} window {k} misaligned", ds.split));
            }
            for r in 0..INPUT_LEN {
                for j in 0..series.features.ncols() {
                    if ds.x[[k, r, j]] != sc.scale_value(j, series.features[[s0 + r, j]]) {
                        problems.push(format!("{} window {k} input ({r},{j})", ds.split));
                    }
                }
            }
            for h in 0..HORIZON {
                if ds.y[[k, h]] != sc.scale_target(series.demand[s0 + INPUT_LEN + h]) {
                    problems.push(format!("{} window {k} target {h}", ds.split));
                }
            }
        }
    }

    // chronology: train < val < test, targets never cross a boundary
    let last_target = |ds: &loadtune::data::WindowedDataset| {
        series.timestamps[*ds.starts.last().unwrap() + INPUT_LEN + HORIZON - 1]
    };
    if !(data.train.origins.last() < data.val.origins.first()
        && data.val.origins.last() < data.test.origins.first())
    {
        problems.push("splits out of order".into());
    }
    if !(last_target(&data.train) < *data.test.origins.first().unwrap()) {
        problems.push("train targets reach the test split".into());
    }
    for ds in [&data.train, &data.val, &data.test] {
        if !ds.origins.windows(2).all(|w| w[0] < w[1]) {
            problems.push(format!("{} not in time order", ds.split));
        }
    }

    // leakage guard
    for split in [Split::Val, Split::Test] {
        if !matches!(fit_scaler(split, &series.features.view()), Err(DataError::Leakage(s)) if s == split)
        {
            problems.push(format!("fit on {split} was accepted"));
        }
    }

    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{} windows checked ({}/{}/{})",
                starts.len(),
                data.train.len(),
                data.val.len(),
                data.test.len()
            )
        } else {
            problems.into_iter().take(5).collect::<Vec<_>>().join("; ")
        },
    )
}

fn metric_oracle() -> Outcome {
    // element-by-element reference with explicit indexing
    fn naive(actual: &[f64], predicted: &[f64]) -> (f64, f64) {
        let (mut sq, mut pct) = (0.0, 0.0);
        for i in 0..actual.len() {
            for j in 0..predicted.len() {
                if i == j {
                    let d = actual[i] - predicted[j];
                    sq += d * d;
                    pct += (d / actual[i]).abs();
                }
            }
        }
        let n = actual.len() as f64;
        (sq / n, 100.0 * pct / n)
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..60);
        let actual: Vec<f64> = (0..n)
            .map(|_| rng.random_range(1.0..100.0) * if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let predicted: Vec<f64> = actual
            .iter()
            .map(|a| a + rng.random_range(-20.0..20.0))
            .collect();
        let (ref_mse, ref_mape) = naive(&actual, &predicted);
        let got_mse = mse(&actual, &predicted).unwrap();
        let got_mape = mape(&actual, &predicted).unwrap();
        worst = worst
            .max((got_mse - ref_mse).abs() / ref_mse.max(1.0))
            .max((got_mape - ref_mape).abs() / ref_mape.max(1.0));
    }
    let worked = mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap();
    let table = metrics::comparison_table(&[]);
    check(
        worst <= 1e-12 && worked == 10.0 && table.rows.is_empty(),
        format!("max relative deviation {worst:.1e} over 1000 vectors; worked example {worked}"),
    )
}

fn tune_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let mut cfg = synthetic_config(1500, 5, tmp.path().join(dir));
        cfg.optimizer.pop_size = 4;
        cfg.optimizer.generations = 2;
        cfg.search.tuning_epoch_cap = 5;
        cfg.parallel = 0;
        cli::tune(&cfg, &TuneArgs::default(), &[]).unwrap();
        std::fs::read(tmp.path().join(dir).join("history.csv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    let rows = String::from_utf8_lossy(&a).lines().count() - 1;
    check(
        a == b && rows == 3,
        format!("{rows} generations, histories identical: {}", a == b),
    )
}

fn real_data() -> Outcome {
    let Some(path) = std::env::var_os("LOADTUNE_ONTARIO_CSV") else {
        return Skip("set LOADTUNE_ONTARIO_CSV to the 19-column hourly file to run".into());
    };
    let loaded = match load_csv(&path) {
        Ok(l) => l,
        Err(e) => return Fail(format!("load failed: {e}")),
    };
    let n = loaded.records.len();
    let series = select_features(&loaded.records, &FeatureSet::default());
    let data = match prepare_dataset(&series, SplitRatios::HOLDOUT_IN_TRAIN) {
        Ok(d) => d,
        Err(e) => return Fail(format!("windowing failed: {e}")),
    };
    let train = data.train.len() as f64;
    let ok = n == 96_432 && (train - 53_558.0).abs() <= 0.1 * 53_558.0;
    check(
        ok,
        format!(
            "{n} records ({} rejected), {} train windows",
            loaded.rejected.len(),
            data.train.len()
        ),
    )
}
