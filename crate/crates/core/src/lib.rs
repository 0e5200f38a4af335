//! Metaheuristic hyperparameter tuning for a GRU short-term load forecaster.
//!
//! The crate is organised bottom-up:
//!
//! * [`metaheuristics`]: DE/rand/1/bin plus GA and PSO baselines over a
//!   bounded mixed integer/continuous search space.
//! * [`grunet`]: a single-layer GRU (3 steps of 8 features in, 24 hourly
//!   values out through a ReLU head) trained with BPTT and Adam.
//! * [`data`]: CSV ingestion, feature selection, standard scaling, sliding
//!   windows, chronological splits and a synthetic load generator.
//! * [`metrics`]: MSE, MAPE and the method comparison table.
//! * [`pipeline`]: glue that turns a search-space candidate into a trained
//!   model and a validation-MSE fitness.

pub mod data;
pub mod grunet;
pub mod metaheuristics;
pub mod metrics;
pub mod pipeline;

#[cfg(feature = "cli")]
pub mod cli;
