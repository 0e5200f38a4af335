use std::io;
use std::time::Duration;

use ndarray::{ArrayView2, ArrayView3, Axis};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{loss_and_gradients, mse_loss, GruModel, GruShape, ModelError};
use crate::data::WindowedDataset;
use crate::metaheuristics::seeded_rng;

/// Global gradient-norm ceiling applied before every Adam step.
pub const CLIP_NORM: f64 = 5.0;

/// The three tuned hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig(
                "batch_size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Loss curve of a training run. Row 0 holds the untrained model's losses;
/// later rows hold the mean mini-batch loss of that epoch and the
/// validation loss after it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochLoss>,
    pub wall_time: Duration,
}

impl TrainReport {
    pub fn final_train_mse(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.train_mse)
    }

    pub fn final_val_mse(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.val_mse)
    }

    /// `epoch,train_mse,val_mse` rows.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_mse", "val_mse"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.train_mse.to_string(),
                e.val_mse.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("training diverged (non-finite loss) in epoch {epoch}")]
    Diverged {
        epoch: usize,
        report: Box<TrainReport>,
    },
}

/// Adam with `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
pub struct Adam {
    m: GruModel,
    v: GruModel,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(shape: GruShape) -> Self {
        Self {
            m: GruModel::zeros(shape),
            v: GruModel::zeros(shape),
            t: 0,
        }
    }

    pub fn step(&mut self, model: &mut GruModel, grads: &GruModel, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let params = model.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((_, p), (_, m)), ((_, v), (_, g))) in params
            .into_iter()
            .zip(ms)
            .zip(vs.into_iter().zip(grads.tensors()))
        {
            for i in 0..p.len() {
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g[i];
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

/// Rescales the gradient so its global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub(crate) fn clip_global_norm(grads: &mut GruModel, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .flat_map(|(_, t)| t.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for (_, t) in grads.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}

pub(crate) fn dataset_mse(
    model: &GruModel,
    x: &ArrayView3<f64>,
    y: &ArrayView2<f64>,
) -> Result<f64, ModelError> {
    let pred = model.predict_batch(x)?;
    mse_loss(&pred, &y.to_owned())
}

/// Trains a freshly initialised default-width model (hidden = 64).
pub fn train(
    train: &WindowedDataset,
    val: &WindowedDataset,
    config: &TrialConfig,
    seed: u64,
) -> Result<(GruModel, TrainReport), TrainError> {
    let (_, steps, input) = train.x.dim();
    let shape = GruShape {
        steps,
        input,
        output: train.y.ncols(),
        ..GruShape::default()
    };
    let mut rng = seeded_rng(seed);
    let model = GruModel::init(shape, &mut rng);
    train_from(model, train, val, config, &mut rng)
}

/// Mini-batch Adam from a given starting model. Batches come from a fresh
/// shuffle of the training windows each epoch; the last partial batch is used.
pub fn train_from(
    mut model: GruModel,
    train: &WindowedDataset,
    val: &WindowedDataset,
    config: &TrialConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(GruModel, TrainReport), TrainError> {
    config.validate()?;
    let n = train.len();
    if n == 0 {
        return Err(TrainError::InvalidConfig("training split is empty".into()));
    }
    let clock = Stopwatch::start();
    let batch_size = config.batch_size.min(n);
    let mut report = TrainReport {
        epochs: vec![EpochLoss {
            epoch: 0,
            train_mse: dataset_mse(&model, &train.x.view(), &train.y.view())?,
            val_mse: dataset_mse(&model, &val.x.view(), &val.y.view())?,
        }],
        wall_time: Duration::ZERO,
    };
    let mut adam = Adam::new(model.shape());
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(batch_size) {
            let x = train.x.select(Axis(0), chunk);
            let y = train.y.select(Axis(0), chunk);
            let (loss, mut grads) = loss_and_gradients(&model, &x.view(), &y.view())?;
            if !loss.is_finite() {
                report.wall_time = clock.elapsed();
                return Err(TrainError::Diverged {
                    epoch,
                    report: Box::new(report),
                });
            }
            weighted += loss * chunk.len() as f64;
            clip_global_norm(&mut grads, CLIP_NORM);
            adam.step(&mut model, &grads, config.learning_rate);
        }
        let val_mse = dataset_mse(&model, &val.x.view(), &val.y.view())?;
        report.epochs.push(EpochLoss {
            epoch,
            train_mse: weighted / n as f64,
            val_mse,
        });
        if !val_mse.is_finite() || !model.is_finite() {
            report.wall_time = clock.elapsed();
            return Err(TrainError::Diverged {
                epoch,
                report: Box::new(report),
            });
        }
    }
    report.wall_time = clock.elapsed();
    Ok((model, report))
}

/// `std::time::Instant` panics on `wasm32-unknown-unknown`; report zero there.
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        #[cfg(not(target_arch = "wasm32"))]
        return Self(std::time::Instant::now());
        #[cfg(target_arch = "wasm32")]
        return Self();
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed();
        #[cfg(target_arch = "wasm32")]
        return Duration::ZERO;
    }
}
