//! Glue between the optimizers and GRU training: a candidate vector decodes to
//! `(batch_size, epochs, learning_rate)` and scores as validation MSE.

use crate::data::WindowedDataset;
use crate::grunet::{train, TrialConfig};
use crate::metaheuristics::{Objective, OptimizeError, ParamSpec, SearchSpace, WORST_FITNESS};

pub const BATCH_SIZE: &str = "batch_size";
pub const EPOCHS: &str = "epochs";
pub const LEARNING_RATE: &str = "learning_rate";

/// Epoch ceiling applied to candidates while tuning.
pub const DEFAULT_TUNING_EPOCH_CAP: usize = 50;

/// batch in [16, 256], epochs in [10, 1000], lr in [1e-4, 0.5].
pub fn default_search_space() -> SearchSpace {
    SearchSpace::new(vec![
        ParamSpec::integer(BATCH_SIZE, 16.0, 256.0),
        ParamSpec::integer(EPOCHS, 10.0, 1000.0),
        ParamSpec::continuous(LEARNING_RATE, 1e-4, 0.5),
    ])
    .expect("static bounds are valid")
}

/// Maps a raw candidate onto a trial; genes are clamped and integer
/// parameters rounded first.
pub fn decode_trial(space: &SearchSpace, genes: &[f64]) -> Result<TrialConfig, OptimizeError> {
    let decoded = space.decode(genes)?;
    let get = |name: &str| {
        decoded
            .get(name)
            .ok_or_else(|| OptimizeError::InvalidSpace(format!("search space lacks `{name}`")))
    };
    Ok(TrialConfig {
        batch_size: get(BATCH_SIZE)?.max(1.0) as usize,
        epochs: get(EPOCHS)?.max(0.0) as usize,
        learning_rate: get(LEARNING_RATE)?,
    })
}

/// Centre of every range, decoded. Stands in for a hand-picked setting.
pub fn manual_baseline(space: &SearchSpace) -> Result<TrialConfig, OptimizeError> {
    let mid: Vec<f64> = space
        .params()
        .iter()
        .map(|p| 0.5 * (p.lower + p.upper))
        .collect();
    decode_trial(space, &mid)
}

/// Validation MSE of a model trained with the decoded candidate.
pub struct PipelineObjective<'a> {
    pub space: SearchSpace,
    pub train: &'a WindowedDataset,
    pub val: &'a WindowedDataset,
    pub seed: u64,
    pub epoch_cap: Option<usize>,
}

pub fn objective_from_pipeline<'a>(
    train: &'a WindowedDataset,
    val: &'a WindowedDataset,
    space: SearchSpace,
    seed: u64,
) -> Result<PipelineObjective<'a>, OptimizeError> {
    for name in [BATCH_SIZE, EPOCHS, LEARNING_RATE] {
        if space.param(name).is_none() {
            return Err(OptimizeError::InvalidSpace(format!(
                "search space lacks `{name}`"
            )));
        }
    }
    Ok(PipelineObjective {
        space,
        train,
        val,
        seed,
        epoch_cap: Some(DEFAULT_TUNING_EPOCH_CAP),
    })
}

impl PipelineObjective<'_> {
    pub fn with_epoch_cap(mut self, cap: Option<usize>) -> Self {
        self.epoch_cap = cap;
        self
    }

    /// The trial actually trained for `genes`, after the epoch cap.
    pub fn trial(&self, genes: &[f64]) -> Result<TrialConfig, OptimizeError> {
        let mut trial = decode_trial(&self.space, genes)?;
        if let Some(cap) = self.epoch_cap {
            trial.epochs = trial.epochs.min(cap);
        }
        Ok(trial)
    }
}

impl Objective for PipelineObjective<'_> {
    fn evaluate(&self, genes: &[f64]) -> f64 {
        let trial = match self.trial(genes) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("undecodable candidate {genes:?}: {e}");
                return WORST_FITNESS;
            }
        };
        match train(self.train, self.val, &trial, self.seed) {
            Ok((_, report)) => {
                let mse = report.final_val_mse();
                log::debug!("trial {trial:?} -> val mse {mse}");
                mse
            }
            Err(e) => {
                log::warn!("trial {trial:?} failed: {e}");
                WORST_FITNESS
            }
        }
    }
}
