//! Single-layer GRU forecaster trained from scratch.
//!
//! Shapes use a row-vector convention: a batch of inputs at one timestep is
//! `[batch, input]`, input weights are `[input, hidden]`, recurrent weights
//! `[hidden, hidden]` and the dense head `[hidden, output]`. One cell step:
//!
//! ```text
//! z  = sigmoid(x W_z + h U_z + b_z)
//! r  = sigmoid(x W_r + h U_r + b_r)
//! h~ = tanh(x W_h + (r * h) U_h + b_h)
//! h' = (1 - z) * h + z * h~
//! ```
//!
//! The prediction is `relu(h_T W_out + b_out)` with `h_0 = 0`.

mod backprop;
mod model;
mod train;

use thiserror::Error;

pub use backprop::{backward, loss_and_gradients};
pub use model::{gru_cell_forward, GateParams, GruModel, GruShape, MODEL_FORMAT_TAG};
pub use train::{
    train, train_from, Adam, EpochLoss, TrainError, TrainReport, TrialConfig, CLIP_NORM,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("shape mismatch for {what}: expected {expected:?}, got {found:?}")]
    Shape {
        what: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("malformed model file at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub(crate) fn shape_err(what: &'static str, expected: &[usize], found: &[usize]) -> ModelError {
    ModelError::Shape {
        what,
        expected: expected.to_vec(),
        found: found.to_vec(),
    }
}

/// Elementwise `max(0, x)`.
pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.max(0.0)).collect()
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean over every element of the squared difference.
pub fn mse_loss(
    pred: &ndarray::Array2<f64>,
    target: &ndarray::Array2<f64>,
) -> Result<f64, ModelError> {
    if pred.dim() != target.dim() {
        return Err(shape_err(
            "prediction vs target",
            &[target.nrows(), target.ncols()],
            &[pred.nrows(), pred.ncols()],
        ));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .iter()
        .zip(target.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.len() as f64)
}
