use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{Objective, OptimizeError, SearchSpace};

/// Analytic test functions with known global minima.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkFn {
    /// `sum x_i^2`, minimum 0 at the origin.
    Sphere,
    /// `10 d + sum (x_i^2 - 10 cos(2 pi x_i))`, minimum 0 at the origin.
    Rastrigin,
    /// `sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`, minimum 0 at all-ones.
    Rosenbrock,
}

impl BenchmarkFn {
    pub const ALL: [BenchmarkFn; 3] = [Self::Sphere, Self::Rastrigin, Self::Rosenbrock];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Rastrigin => "rastrigin",
            Self::Rosenbrock => "rosenbrock",
        }
    }

    /// Conventional search box for the function.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            Self::Sphere => (-5.0, 5.0),
            Self::Rastrigin => (-5.12, 5.12),
            Self::Rosenbrock => (-5.0, 10.0),
        }
    }

    pub fn minimizer(self, dims: usize) -> Vec<f64> {
        match self {
            Self::Sphere | Self::Rastrigin => vec![0.0; dims],
            Self::Rosenbrock => vec![1.0; dims],
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Self::Sphere => x.iter().map(|v| v * v).sum(),
            Self::Rastrigin => {
                10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                        .sum::<f64>()
            }
            Self::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
        }
    }
}

impl fmt::Display for BenchmarkFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkFn {
    type Err = OptimizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| OptimizeError::UnknownBenchmark(s.to_string()))
    }
}

/// A benchmark function bound to a dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmark {
    pub function: BenchmarkFn,
    pub dims: usize,
}

impl Benchmark {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.function.value(x)
    }

    pub fn search_space(&self) -> Result<SearchSpace, OptimizeError> {
        let (lo, hi) = self.function.default_bounds();
        SearchSpace::uniform(self.dims, lo, hi)
    }
}

impl Objective for Benchmark {
    fn evaluate(&self, genes: &[f64]) -> f64 {
        self.value(genes)
    }
}

pub fn benchmark_objective(name: &str, d: usize) -> Result<Benchmark, OptimizeError> {
    if d == 0 {
        return Err(OptimizeError::InvalidConfig(
            "benchmark dimension must be at least 1".into(),
        ));
    }
    Ok(Benchmark {
        function: name.parse()?,
        dims: d,
    })
}
