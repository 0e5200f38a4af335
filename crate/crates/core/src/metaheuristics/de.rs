//! Differential Evolution, DE/rand/1/bin.
//!
//! Every generation builds one trial per member from the current population
//! (so all trials of a generation can be evaluated independently), then
//! replaces each member by its trial when `f(trial) <= f(member)`.
//!
//! Random draws per member, in order: donor indices `r1`, `r2`, `r3` (each an
//! `index(N)` redrawn until distinct from the target and earlier donors),
//! the forced crossover index `index(D)`, then one `unit()` per gene.

use serde::{Deserialize, Serialize};

use super::population::{init_population_with, seeded_rng, MIN_DE_POPULATION};
use super::{
    check_probability, evaluate_batch, Candidate, Evaluation, GenerationStats, Objective,
    OptimizeError, OptimizeResult, Population, RandomSource, SearchSpace, Tracker,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    /// Mutation weight `F`, in `[0, 2]`.
    pub f_scale: f64,
    /// Crossover rate `CR`, in `[0, 1]`.
    pub cr: f64,
    pub pop_size: usize,
    pub max_generations: usize,
    /// Stop before a generation whose evaluations would exceed this count.
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub evaluation: Evaluation,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            f_scale: 0.8,
            cr: 0.9,
            pop_size: 20,
            max_generations: 100,
            max_evaluations: None,
            seed: 0,
            evaluation: Evaluation::Sequential,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if !(0.0..=2.0).contains(&self.f_scale) {
            return Err(OptimizeError::InvalidConfig(format!(
                "f_scale must lie in [0, 2], got {}",
                self.f_scale
            )));
        }
        check_probability("cr", self.cr)?;
        if self.pop_size < MIN_DE_POPULATION {
            return Err(OptimizeError::PopulationTooSmall {
                size: self.pop_size,
                min: MIN_DE_POPULATION,
            });
        }
        Ok(())
    }
}

/// A mutant vector and the donors it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Mutant {
    pub genes: Vec<f64>,
    pub donors: [usize; 3],
}

/// `x_r1 + F * (x_r2 - x_r3)` with three donors distinct from each other and
/// from `target_index`. The result is not clamped.
pub fn mutate<R: RandomSource + ?Sized>(
    pop: &Population,
    target_index: usize,
    f_scale: f64,
    rng: &mut R,
) -> Result<Mutant, OptimizeError> {
    let n = pop.len();
    if n < MIN_DE_POPULATION {
        return Err(OptimizeError::PopulationTooSmall {
            size: n,
            min: MIN_DE_POPULATION,
        });
    }
    let mut donors = [target_index; 3];
    for k in 0..3 {
        donors[k] = loop {
            let r = rng.index(n);
            if r != target_index && !donors[..k].contains(&r) {
                break r;
            }
        };
    }
    let [a, b, c] = donors.map(|i| pop.members[i].genes.as_slice());
    let genes = a
        .iter()
        .zip(b)
        .zip(c)
        .map(|((&a, &b), &c)| a + f_scale * (b - c))
        .collect();
    Ok(Mutant { genes, donors })
}

/// Binomial crossover. Gene `j` comes from the mutant when its uniform draw
/// is `<= cr` or when `j` is the forced index, otherwise from the target.
pub fn crossover<R: RandomSource + ?Sized>(
    target: &Candidate,
    mutant: &[f64],
    cr: f64,
    rng: &mut R,
) -> Result<Vec<f64>, OptimizeError> {
    let d = target.genes.len();
    if mutant.len() != d {
        return Err(OptimizeError::DimensionMismatch {
            expected: d,
            found: mutant.len(),
        });
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    let forced = rng.index(d);
    Ok(target
        .genes
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(j, (&x, &v))| {
            let u = rng.unit();
            if u <= cr || j == forced {
                v
            } else {
                x
            }
        })
        .collect())
}

/// Greedy one-to-one selection; ties keep the trial.
pub fn select(target: Candidate, trial: Candidate) -> Result<Candidate, OptimizeError> {
    match (target.fitness, trial.fitness) {
        (Some(ft), Some(fu)) => Ok(if fu <= ft { trial } else { target }),
        _ => Err(OptimizeError::Unevaluated),
    }
}

/// Runs DE from a population seeded by `cfg.seed`.
pub fn de_optimize<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &O,
    cfg: &DeConfig,
    on_generation: impl FnMut(&GenerationStats, &[Candidate]),
) -> Result<OptimizeResult, OptimizeError> {
    de_optimize_with(
        space,
        objective,
        cfg,
        &mut seeded_rng(cfg.seed),
        on_generation,
    )
}

/// As [`de_optimize`], drawing from `rng` instead of `cfg.seed`.
pub fn de_optimize_with<O, R>(
    space: &SearchSpace,
    objective: &O,
    cfg: &DeConfig,
    rng: &mut R,
    mut on_generation: impl FnMut(&GenerationStats, &[Candidate]),
) -> Result<OptimizeResult, OptimizeError>
where
    O: Objective + ?Sized,
    R: RandomSource + ?Sized,
{
    cfg.validate()?;
    let mut pop = init_population_with(space, cfg.pop_size, rng)?;
    let mut tracker = Tracker::new();

    let genes: Vec<Vec<f64>> = pop.members.iter().map(|m| m.genes.clone()).collect();
    for (m, f) in pop
        .members
        .iter_mut()
        .zip(evaluate_batch(objective, &genes, cfg.evaluation))
    {
        m.fitness = Some(f);
        tracker.offer(&m.genes, f);
    }
    tracker.close_generation(0, &pop.members, &mut on_generation);

    for generation in 1..=cfg.max_generations {
        if cfg
            .max_evaluations
            .is_some_and(|cap| tracker.evaluations() + pop.len() > cap)
        {
            break;
        }
        let mut trials = Vec::with_capacity(pop.len());
        for i in 0..pop.len() {
            let mut mutant = mutate(&pop, i, cfg.f_scale, rng)?.genes;
            space.clamp(&mut mutant);
            trials.push(crossover(&pop.members[i], &mutant, cfg.cr, rng)?);
        }
        let fitness = evaluate_batch(objective, &trials, cfg.evaluation);
        let previous = std::mem::take(&mut pop.members);
        pop.members = previous
            .into_iter()
            .zip(trials.into_iter().zip(fitness))
            .map(|(target, (genes, f))| {
                tracker.offer(&genes, f);
                select(target, Candidate::evaluated(genes, f))
            })
            .collect::<Result<_, _>>()?;
        pop.generation = generation;
        tracker.close_generation(generation, &pop.members, &mut on_generation);
    }
    Ok(tracker.finish(pop.members))
}
