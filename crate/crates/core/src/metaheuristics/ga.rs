//! Real-coded genetic algorithm: tournament selection, BLX-alpha blend
//! crossover, Gaussian mutation with a geometrically shrinking step, and
//! elitism.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::population::{random_point, seeded_rng};
use super::{
    check_probability, evaluate_batch, Candidate, Evaluation, GenerationStats, Objective,
    OptimizeError, OptimizeResult, SearchSpace, Tracker,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub pop_size: usize,
    pub max_generations: usize,
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    pub tournament_size: usize,
    /// Probability that a parent pair is recombined rather than copied.
    pub crossover_rate: f64,
    /// BLX-alpha extension of the parents' interval on each side.
    pub blend_alpha: f64,
    /// Per-gene mutation probability; `None` means `1 / D`.
    #[serde(default)]
    pub mutation_rate: Option<f64>,
    /// Initial Gaussian step as a fraction of each dimension's width.
    pub mutation_scale: f64,
    /// Per-generation multiplier applied to the mutation step.
    pub mutation_decay: f64,
    /// Best members copied unchanged into the next generation.
    pub elite_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub evaluation: Evaluation,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop_size: 20,
            max_generations: 100,
            max_evaluations: None,
            tournament_size: 3,
            crossover_rate: 0.9,
            blend_alpha: 0.3,
            mutation_rate: None,
            mutation_scale: 0.1,
            mutation_decay: 0.95,
            elite_count: 2,
            seed: 0,
            evaluation: Evaluation::Sequential,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.pop_size < 2 {
            return Err(OptimizeError::PopulationTooSmall {
                size: self.pop_size,
                min: 2,
            });
        }
        if self.tournament_size == 0 {
            return Err(OptimizeError::InvalidConfig(
                "tournament_size must be at least 1".into(),
            ));
        }
        if self.elite_count == 0 || self.elite_count >= self.pop_size {
            return Err(OptimizeError::InvalidConfig(format!(
                "elite_count must lie in 1..{}, got {}",
                self.pop_size, self.elite_count
            )));
        }
        check_probability("crossover_rate", self.crossover_rate)?;
        if let Some(rate) = self.mutation_rate {
            check_probability("mutation_rate", rate)?;
        }
        if !(self.blend_alpha >= 0.0 && self.mutation_scale >= 0.0 && self.mutation_decay > 0.0) {
            return Err(OptimizeError::InvalidConfig(
                "blend_alpha and mutation_scale must be >= 0, mutation_decay > 0".into(),
            ));
        }
        Ok(())
    }

    /// Worst-case objective calls per generation after the first.
    pub fn offspring_per_generation(&self) -> usize {
        self.pop_size - self.elite_count
    }
}

fn tournament<'a>(pop: &'a [Candidate], k: usize, rng: &mut ChaCha8Rng) -> &'a Candidate {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..k {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.fitness < best.fitness {
            best = c;
        }
    }
    best
}

pub fn ga_optimize<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &O,
    cfg: &GaConfig,
    mut on_generation: impl FnMut(&GenerationStats, &[Candidate]),
) -> Result<OptimizeResult, OptimizeError> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed);
    let mut tracker = Tracker::new();
    let d = space.dims();
    let mutation_rate = cfg.mutation_rate.unwrap_or(1.0 / d as f64);

    let genes: Vec<Vec<f64>> = (0..cfg.pop_size)
        .map(|_| random_point(space, &mut rng))
        .collect();
    let fitness = evaluate_batch(objective, &genes, cfg.evaluation);
    let mut pop: Vec<Candidate> = genes
        .into_iter()
        .zip(fitness)
        .map(|(g, f)| {
            tracker.offer(&g, f);
            Candidate::evaluated(g, f)
        })
        .collect();
    tracker.close_generation(0, &pop, &mut on_generation);

    let mut step = cfg.mutation_scale;
    for generation in 1..=cfg.max_generations {
        if cfg
            .max_evaluations
            .is_some_and(|cap| tracker.evaluations() + cfg.offspring_per_generation() > cap)
        {
            break;
        }
        // Stable sort keeps the earlier member on equal fitness.
        pop.sort_by(|a, b| a.fitness.partial_cmp(&b.fitness).expect("no NaN fitness"));
        let mut next: Vec<Candidate> = pop[..cfg.elite_count].to_vec();

        let mut offspring: Vec<Candidate> = Vec::with_capacity(cfg.offspring_per_generation());
        while offspring.len() < cfg.offspring_per_generation() {
            let a = tournament(&pop, cfg.tournament_size, &mut rng).clone();
            let b = tournament(&pop, cfg.tournament_size, &mut rng).clone();
            let (mut c1, mut c2) = if rng.random::<f64>() < cfg.crossover_rate {
                let (g1, g2) = blend(&a.genes, &b.genes, cfg.blend_alpha, space, &mut rng);
                (Candidate::new(g1), Candidate::new(g2))
            } else {
                (a, b)
            };
            for child in [&mut c1, &mut c2] {
                mutate_gaussian(child, space, mutation_rate, step, &mut rng);
            }
            offspring.push(c1);
            if offspring.len() < cfg.offspring_per_generation() {
                offspring.push(c2);
            }
        }

        let pending: Vec<usize> = (0..offspring.len())
            .filter(|&i| offspring[i].fitness.is_none())
            .collect();
        let batch: Vec<Vec<f64>> = pending
            .iter()
            .map(|&i| offspring[i].genes.clone())
            .collect();
        for (&i, f) in pending
            .iter()
            .zip(evaluate_batch(objective, &batch, cfg.evaluation))
        {
            tracker.offer(&offspring[i].genes, f);
            offspring[i].fitness = Some(f);
        }
        next.extend(offspring);
        pop = next;
        step *= cfg.mutation_decay;
        tracker.close_generation(generation, &pop, &mut on_generation);
    }
    Ok(tracker.finish(pop))
}

fn blend(
    a: &[f64],
    b: &[f64],
    alpha: f64,
    space: &SearchSpace,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut draw = |x: f64, y: f64, lo: f64, hi: f64| {
        let (min, max) = (x.min(y), x.max(y));
        let ext = alpha * (max - min);
        (min - ext + rng.random::<f64>() * (max - min + 2.0 * ext)).clamp(lo, hi)
    };
    let mut c1 = Vec::with_capacity(a.len());
    let mut c2 = Vec::with_capacity(a.len());
    for ((&x, &y), p) in a.iter().zip(b).zip(space.params()) {
        c1.push(draw(x, y, p.lower, p.upper));
        c2.push(draw(x, y, p.lower, p.upper));
    }
    (c1, c2)
}

/// Perturbs genes in place; clears the cached fitness only if a gene moved.
fn mutate_gaussian(
    child: &mut Candidate,
    space: &SearchSpace,
    rate: f64,
    step: f64,
    rng: &mut ChaCha8Rng,
) {
    let mut changed = false;
    for (g, p) in child.genes.iter_mut().zip(space.params()) {
        if rng.random::<f64>() < rate {
            let z: f64 = rng.sample(StandardNormal);
            let moved = p.clamp(*g + z * step * p.width());
            changed |= moved != *g;
            *g = moved;
        }
    }
    if changed {
        child.fitness = None;
    }
}
