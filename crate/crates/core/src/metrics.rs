//! Forecast accuracy: MSE in the scaled domain, MAPE in kW.

use std::cmp::Ordering;
use std::fmt;
use std::io;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ScalerParams, WindowedDataset};
use crate::grunet::{mse_loss, GruModel, ModelError};

/// Actual values closer to zero than this make MAPE undefined.
pub const MAPE_ZERO_GUARD: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("length mismatch: {actual} actual values vs {predicted} predictions")]
    Length { actual: usize, predicted: usize },
    #[error("actual value at index {index} is {value}, MAPE is undefined")]
    ZeroActual { index: usize, value: f64 },
    #[error("cannot compute MAPE of an empty series")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `100 / n * sum(|a - p| / |a|)`.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    if actual.len() != predicted.len() {
        return Err(MetricError::Length {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sum = 0.0;
    for (index, (a, p)) in actual.iter().zip(predicted).enumerate() {
        if !(a.abs() >= MAPE_ZERO_GUARD) {
            return Err(MetricError::ZeroActual { index, value: *a });
        }
        sum += ((a - p) / a).abs();
    }
    Ok(100.0 * sum / actual.len() as f64)
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    if actual.len() != predicted.len() {
        return Err(MetricError::Length {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok(sum / actual.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    /// Scaled domain.
    pub mse: f64,
    /// Percent, in kW.
    pub mape: f64,
    pub n_windows: usize,
}

/// Scores scaled predictions `[n, horizon]` against a split's targets.
pub fn evaluate_predictions(
    method: &str,
    predicted: &Array2<f64>,
    split: &WindowedDataset,
    scaler: &ScalerParams,
) -> Result<EvalReport, MetricError> {
    let mse = mse_loss(predicted, &split.y)?;
    let to_kw = |v: &f64| scaler.inverse_target(*v);
    let actual: Vec<f64> = split.y.iter().map(to_kw).collect();
    let pred: Vec<f64> = predicted.iter().map(to_kw).collect();
    Ok(EvalReport {
        method: method.to_string(),
        mse,
        mape: mape(&actual, &pred)?,
        n_windows: split.len(),
    })
}

pub fn evaluate(
    method: &str,
    model: &GruModel,
    split: &WindowedDataset,
    scaler: &ScalerParams,
) -> Result<EvalReport, MetricError> {
    let pred = model.predict_batch(&split.x.view())?;
    evaluate_predictions(method, &pred, split, scaler)
}

/// One method's outcome in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonRow {
    Ok(EvalReport),
    Failed { method: String, reason: String },
}

impl ComparisonRow {
    pub fn method(&self) -> &str {
        match self {
            Self::Ok(r) => &r.method,
            Self::Failed { method, .. } => method,
        }
    }

    fn mape(&self) -> f64 {
        match self {
            Self::Ok(r) => r.mape,
            Self::Failed { .. } => f64::INFINITY,
        }
    }
}

/// Rows ordered by MAPE, ties by method name, failures last.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

pub fn comparison_table(reports: &[EvalReport]) -> ComparisonTable {
    ComparisonTable::new(reports.iter().cloned().map(ComparisonRow::Ok).collect())
}

impl ComparisonTable {
    pub fn new(mut rows: Vec<ComparisonRow>) -> Self {
        rows.sort_by(|a, b| {
            a.mape()
                .partial_cmp(&b.mape())
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.method().cmp(b.method()))
        });
        Self { rows }
    }

    pub fn has_failures(&self) -> bool {
        self.rows
            .iter()
            .any(|r| matches!(r, ComparisonRow::Failed { .. }))
    }

    /// `method,mape,mse,n_windows`; failed rows carry `failed` in the MAPE cell.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "mape", "mse", "n_windows"])?;
        for row in &self.rows {
            match row {
                ComparisonRow::Ok(r) => w.write_record([
                    r.method.clone(),
                    r.mape.to_string(),
                    r.mse.to_string(),
                    r.n_windows.to_string(),
                ])?,
                ComparisonRow::Failed { method, .. } => {
                    w.write_record([method.as_str(), "failed", "", ""])?
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.method().len())
            .chain(["method".len()])
            .max()
            .unwrap_or(0);
        writeln!(
            f,
            "{:<width$}  {:>9}  {:>12}  {:>9}",
            "method", "mape_%", "mse", "n_windows"
        )?;
        for row in &self.rows {
            match row {
                ComparisonRow::Ok(r) => writeln!(
                    f,
                    "{:<width$}  {:>9.4}  {:>12.6}  {:>9}",
                    r.method, r.mape, r.mse, r.n_windows
                )?,
                ComparisonRow::Failed { method, reason } => {
                    writeln!(f, "{method:<width$}  {:>9}  {reason}", "FAILED")?
                }
            }
        }
        Ok(())
    }
}
