//! Population-based black-box minimizers over a bounded search space.
//!
//! [`de_optimize`] implements DE/rand/1/bin. [`ga_optimize`] (real-coded GA)
//! and [`pso_optimize`] (global-best PSO) are baselines sharing the same
//! [`Objective`] and [`OptimizeResult`] contract, so their histories are
//! directly comparable.
//!
//! All optimizers minimize. An objective that returns a non-finite value is
//! recorded at [`WORST_FITNESS`] and can never win a selection against a
//! finite incumbent.

mod benchmarks;
mod de;
mod ga;
mod population;
mod pso;
mod space;

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use benchmarks::{benchmark_objective, Benchmark, BenchmarkFn};
pub use de::{crossover, de_optimize, de_optimize_with, mutate, select, DeConfig, Mutant};
pub use ga::{ga_optimize, GaConfig};
pub use population::{init_population, init_population_with, seeded_rng, Candidate, Population};
pub use pso::{pso_optimize, PsoConfig};
pub use space::{DecodedParams, ParamKind, ParamSpec, SearchSpace};

/// Fitness assigned to candidates whose objective value is NaN or infinite.
pub const WORST_FITNESS: f64 = f64::INFINITY;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("population of {size} is too small, need at least {min}")]
    PopulationTooSmall { size: usize, min: usize },
    #[error("vector of length {found} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("candidate fitness has not been evaluated")]
    Unevaluated,
    #[error("unknown benchmark function `{0}` (expected sphere, rastrigin or rosenbrock)")]
    UnknownBenchmark(String),
}

/// A function to minimize. Must be callable from several threads at once
/// when evaluation is parallel.
pub trait Objective: Sync {
    fn evaluate(&self, genes: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, genes: &[f64]) -> f64 {
        self(genes)
    }
}

/// Source of the two kinds of random draws the operators consume.
///
/// Keeping the draw vocabulary this small lets tests replay an exact tape of
/// values through the operators.
pub trait RandomSource {
    /// Uniform draw in `[0, 1)`.
    fn unit(&mut self) -> f64;
    /// Uniform index in `0..n`; `n` is always at least 1.
    fn index(&mut self, n: usize) -> usize;
}

impl<R: rand::Rng + ?Sized> RandomSource for R {
    fn unit(&mut self) -> f64 {
        self.random::<f64>()
    }

    fn index(&mut self, n: usize) -> usize {
        self.random_range(0..n)
    }
}

/// How the candidates of one generation are evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evaluation {
    #[default]
    Sequential,
    /// Dispatch a generation's evaluations onto a pool of `threads` workers.
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel { threads: usize },
}

/// Summary of one generation. `best_fitness` is the best value evaluated so
/// far; `evaluations` is cumulative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best: Candidate,
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
    /// Members (or particle positions) after the last generation.
    pub population: Vec<Candidate>,
}

impl OptimizeResult {
    pub fn best_fitness(&self) -> f64 {
        self.best.fitness.unwrap_or(WORST_FITNESS)
    }

    /// Writes `generation,best_fitness,mean_fitness,evaluations` rows.
    pub fn write_history_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = HistoryWriter::new(out)?;
        for row in &self.history {
            w.write(row)?;
        }
        w.finish()
    }
}

/// Streams history rows as they are produced, flushing after each one so an
/// interrupted run keeps everything up to its last finished generation.
pub struct HistoryWriter<W: io::Write> {
    inner: csv::Writer<W>,
}

impl<W: io::Write> HistoryWriter<W> {
    pub fn new(out: W) -> csv::Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["generation", "best_fitness", "mean_fitness", "evaluations"])?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &GenerationStats) -> csv::Result<()> {
        self.inner.write_record([
            row.generation.to_string(),
            row.best_fitness.to_string(),
            row.mean_fitness.to_string(),
            row.evaluations.to_string(),
        ])?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> csv::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[inline]
pub(crate) fn sanitize(value: f64) -> f64 {
    if value.is_finite() {
        value
    } else {
        WORST_FITNESS
    }
}

/// Evaluates a batch of gene vectors, preserving input order in the output.
pub(crate) fn evaluate_batch<O: Objective + ?Sized>(
    objective: &O,
    batch: &[Vec<f64>],
    mode: Evaluation,
) -> Vec<f64> {
    match mode {
        #[cfg(feature = "parallel")]
        Evaluation::Parallel { threads } if threads > 1 && batch.len() > 1 => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build();
            match pool {
                Ok(pool) => pool.install(|| {
                    batch
                        .par_iter()
                        .map(|g| sanitize(objective.evaluate(g)))
                        .collect()
                }),
                Err(_) => batch
                    .iter()
                    .map(|g| sanitize(objective.evaluate(g)))
                    .collect(),
            }
        }
        _ => batch
            .iter()
            .map(|g| sanitize(objective.evaluate(g)))
            .collect(),
    }
}

/// Tracks best-so-far and produces [`GenerationStats`] rows.
pub(crate) struct Tracker {
    best: Option<Candidate>,
    evaluations: usize,
    history: Vec<GenerationStats>,
}

impl Tracker {
    pub(crate) fn new() -> Self {
        Self {
            best: None,
            evaluations: 0,
            history: Vec::new(),
        }
    }

    pub(crate) fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub(crate) fn offer(&mut self, genes: &[f64], fitness: f64) {
        self.evaluations += 1;
        let better = match &self.best {
            None => true,
            Some(b) => fitness < b.fitness.unwrap_or(WORST_FITNESS),
        };
        if better {
            self.best = Some(Candidate {
                genes: genes.to_vec(),
                fitness: Some(fitness),
            });
        }
    }

    pub(crate) fn close_generation(
        &mut self,
        generation: usize,
        population: &[Candidate],
        on_generation: &mut dyn FnMut(&GenerationStats, &[Candidate]),
    ) {
        let (sum, n) = population
            .iter()
            .filter_map(|c| c.fitness)
            .fold((0.0, 0usize), |(s, n), f| (s + f, n + 1));
        let stats = GenerationStats {
            generation,
            best_fitness: self
                .best
                .as_ref()
                .and_then(|b| b.fitness)
                .unwrap_or(WORST_FITNESS),
            mean_fitness: if n == 0 {
                WORST_FITNESS
            } else {
                sum / n as f64
            },
            evaluations: self.evaluations,
        };
        on_generation(&stats, population);
        self.history.push(stats);
    }

    pub(crate) fn finish(self, population: Vec<Candidate>) -> OptimizeResult {
        OptimizeResult {
            best: self.best.expect("at least one evaluation"),
            history: self.history,
            evaluations: self.evaluations,
            population,
        }
    }
}

pub(crate) fn check_probability(name: &str, value: f64) -> Result<(), OptimizeError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(OptimizeError::InvalidConfig(format!(
            "{name} must lie in [0, 1], got {value}"
        )));
    }
    Ok(())
}
