//! Global-best particle swarm with inertia weight and velocity clamping.
//!
//! A particle that would leave the box is put on the violated bound and its
//! velocity along that axis zeroed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::population::{random_point, seeded_rng};
use super::{
    evaluate_batch, Candidate, Evaluation, GenerationStats, Objective, OptimizeError,
    OptimizeResult, SearchSpace, Tracker,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_iterations: usize,
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity bound per axis, as a fraction of the axis width.
    pub velocity_limit: f64,
    pub seed: u64,
    #[serde(default)]
    pub evaluation: Evaluation,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 20,
            max_iterations: 100,
            max_evaluations: None,
            inertia: 0.7298,
            cognitive: 1.49618,
            social: 1.49618,
            velocity_limit: 0.2,
            seed: 0,
            evaluation: Evaluation::Sequential,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.swarm_size < 1 {
            return Err(OptimizeError::PopulationTooSmall { size: 0, min: 1 });
        }
        let coeffs = [
            self.inertia,
            self.cognitive,
            self.social,
            self.velocity_limit,
        ];
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(OptimizeError::InvalidConfig(
                "inertia, cognitive, social and velocity_limit must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

struct Particle {
    position: Candidate,
    velocity: Vec<f64>,
    best: Candidate,
}

pub fn pso_optimize<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &O,
    cfg: &PsoConfig,
    mut on_generation: impl FnMut(&GenerationStats, &[Candidate]),
) -> Result<OptimizeResult, OptimizeError> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed);
    let mut tracker = Tracker::new();
    let vmax: Vec<f64> = space
        .params()
        .iter()
        .map(|p| cfg.velocity_limit * p.width())
        .collect();

    let starts: Vec<Vec<f64>> = (0..cfg.swarm_size)
        .map(|_| random_point(space, &mut rng))
        .collect();
    let fitness = evaluate_batch(objective, &starts, cfg.evaluation);
    let mut swarm: Vec<Particle> = starts
        .into_iter()
        .zip(fitness)
        .map(|(g, f)| {
            tracker.offer(&g, f);
            let velocity = vmax
                .iter()
                .map(|v| (2.0 * rng.random::<f64>() - 1.0) * v)
                .collect();
            let c = Candidate::evaluated(g, f);
            Particle {
                position: c.clone(),
                velocity,
                best: c,
            }
        })
        .collect();
    let mut global = best_of(&swarm);
    let positions =
        |swarm: &[Particle]| swarm.iter().map(|p| p.position.clone()).collect::<Vec<_>>();
    tracker.close_generation(0, &positions(&swarm), &mut on_generation);

    for iteration in 1..=cfg.max_iterations {
        if cfg
            .max_evaluations
            .is_some_and(|cap| tracker.evaluations() + swarm.len() > cap)
        {
            break;
        }
        for p in swarm.iter_mut() {
            let mut moved = false;
            for (j, spec) in space.params().iter().enumerate() {
                let x = p.position.genes[j];
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let v = cfg.inertia * p.velocity[j]
                    + cfg.cognitive * r1 * (p.best.genes[j] - x)
                    + cfg.social * r2 * (global.genes[j] - x);
                let mut v = v.clamp(-vmax[j], vmax[j]);
                let mut next = x + v;
                if next < spec.lower || next > spec.upper {
                    next = spec.clamp(next);
                    v = 0.0;
                }
                moved |= next != x;
                p.velocity[j] = v;
                p.position.genes[j] = next;
            }
            if moved {
                p.position.fitness = None;
            }
        }

        let pending: Vec<usize> = (0..swarm.len())
            .filter(|&i| swarm[i].position.fitness.is_none())
            .collect();
        let batch: Vec<Vec<f64>> = pending
            .iter()
            .map(|&i| swarm[i].position.genes.clone())
            .collect();
        for (&i, f) in pending
            .iter()
            .zip(evaluate_batch(objective, &batch, cfg.evaluation))
        {
            let p = &mut swarm[i];
            tracker.offer(&p.position.genes, f);
            p.position.fitness = Some(f);
            if f < p.best.fitness.expect("evaluated") {
                p.best = p.position.clone();
            }
        }
        let candidate = best_of(&swarm);
        if candidate.fitness < global.fitness {
            global = candidate;
        }
        tracker.close_generation(iteration, &positions(&swarm), &mut on_generation);
    }
    Ok(tracker.finish(positions(&swarm)))
}

fn best_of(swarm: &[Particle]) -> Candidate {
    swarm
        .iter()
        .map(|p| &p.best)
        .fold(None::<&Candidate>, |acc, c| match acc {
            Some(a) if a.fitness <= c.fitness => Some(a),
            _ => Some(c),
        })
        .expect("non-empty swarm")
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metaheuristics::benchmark_objective;

    #[test]
    fn frozen_swarm_never_moves() {
        let space = SearchSpace::uniform(3, -5.0, 5.0).unwrap();
        let sphere = benchmark_objective("sphere", 3).unwrap();
        let cfg = PsoConfig {
            inertia: 0.0,
            cognitive: 0.0,
            social: 0.0,
            max_iterations: 20,
            ..PsoConfig::default()
        };
        let mut first: Option<Vec<Candidate>> = None;
        let res = pso_optimize(&space, &sphere, &cfg, |_, pop| match &first {
            None => first = Some(pop.to_vec()),
            Some(f) => assert_eq!(f.as_slice(), pop),
        })
        .unwrap();
        assert_eq!(
            res.history.first().unwrap().best_fitness,
            res.best_fitness()
        );
        assert_eq!(res.evaluations, cfg.swarm_size);
    }

    #[test]
    fn global_best_non_increasing() {
        let space = SearchSpace::uniform(4, -5.0, 10.0).unwrap();
        let rosen = benchmark_objective("rosenbrock", 4).unwrap();
        let res = pso_optimize(&space, &rosen, &PsoConfig::default(), |_, _| {}).unwrap();
        assert!(res
            .history
            .windows(2)
            .all(|w| w[1].best_fitness <= w[0].best_fitness));
    }

    #[test]
    fn positions_stay_in_bounds() {
        let space = SearchSpace::uniform(2, 0.0, 1.0).unwrap();
        let f = |g: &[f64]| -(g[0] + g[1]);
        let cfg = PsoConfig {
            velocity_limit: 3.0,
            ..PsoConfig::default()
        };
        pso_optimize(&space, &f, &cfg, |_, pop| {
            assert!(pop.iter().all(|c| space.contains(&c.genes)))
        })
        .unwrap();
    }
}
