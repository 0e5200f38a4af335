use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{OptimizeError, RandomSource, SearchSpace};

/// DE needs three donors distinct from each other and from the target.
pub(crate) const MIN_DE_POPULATION: usize = 4;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point in the search space with its cached objective value
/// (lower is better, `None` until evaluated).
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub genes: Vec<f64>,
    pub fitness: Option<f64>,
}

impl Candidate {
    pub fn new(genes: Vec<f64>) -> Self {
        Self {
            genes,
            fitness: None,
        }
    }

    pub fn evaluated(genes: Vec<f64>, fitness: f64) -> Self {
        Self {
            genes,
            fitness: Some(fitness),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Candidate>,
    pub generation: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of the lowest-fitness evaluated member; ties go to the lowest index.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in self.members.iter().enumerate() {
            if let Some(f) = m.fitness {
                if best.is_none_or(|(_, b)| f < b) {
                    best = Some((i, f));
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Draws `n` candidates uniformly inside the bounds of `space`, seeded.
pub fn init_population(
    space: &SearchSpace,
    n: usize,
    rng_seed: u64,
) -> Result<Population, OptimizeError> {
    init_population_with(space, n, &mut seeded_rng(rng_seed))
}

/// As [`init_population`], drawing from an explicit source. Genes are drawn
/// member by member, dimension by dimension, one `unit()` each.
pub fn init_population_with<R: RandomSource + ?Sized>(
    space: &SearchSpace,
    n: usize,
    rng: &mut R,
) -> Result<Population, OptimizeError> {
    if n < MIN_DE_POPULATION {
        return Err(OptimizeError::PopulationTooSmall {
            size: n,
            min: MIN_DE_POPULATION,
        });
    }
    Ok(Population {
        members: (0..n)
            .map(|_| Candidate::new(random_point(space, rng)))
            .collect(),
        generation: 0,
    })
}

pub(crate) fn random_point<R: RandomSource + ?Sized>(space: &SearchSpace, rng: &mut R) -> Vec<f64> {
    space
        .params()
        .iter()
        .map(|p| p.clamp(p.lower + rng.unit() * p.width()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metaheuristics::ParamSpec;

    #[test]
    fn genes_fall_inside_bounds() {
        let space = SearchSpace::uniform(1, 0.0, 1.0).unwrap();
        let pop = init_population(&space, 4, 9).unwrap();
        assert_eq!(pop.len(), 4);
        assert_eq!(pop.generation, 0);
        assert!(pop
            .members
            .iter()
            .all(|m| (0.0..=1.0).contains(&m.genes[0])));
        assert!(pop.members.iter().all(|m| m.fitness.is_none()));
    }

    #[test]
    fn degenerate_width_bounds() {
        let eps = 1e-12;
        let space = SearchSpace::new(vec![ParamSpec::continuous("a", 5.0, 5.0 + eps)]).unwrap();
        let pop = init_population(&space, 25, 1).unwrap();
        assert!(pop
            .members
            .iter()
            .all(|m| m.genes[0] >= 5.0 && m.genes[0] <= 5.0 + eps));
    }

    #[test]
    fn shape_follows_space_and_count() {
        let space = SearchSpace::uniform(3, -1.0, 1.0).unwrap();
        let pop = init_population(&space, 10, 3).unwrap();
        assert_eq!(pop.len(), 10);
        assert!(pop.members.iter().all(|m| m.genes.len() == 3));
    }

    #[test]
    fn too_small_population_is_rejected() {
        let space = SearchSpace::uniform(2, 0.0, 1.0).unwrap();
        assert_eq!(
            init_population(&space, 3, 0),
            Err(OptimizeError::PopulationTooSmall { size: 3, min: 4 })
        );
    }
}
