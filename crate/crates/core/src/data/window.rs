use std::fmt;

use chrono::NaiveDateTime;
use ndarray::{s, Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{fit_scaler, DataError, ScalerParams, Series};

/// Hours of history per window.
pub const INPUT_LEN: usize = 3;
/// Hours forecast per window.
pub const HORIZON: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// Windows of one split, in the scaled domain.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// `[n, INPUT_LEN, features]`
    pub x: Array3<f64>,
    /// `[n, HORIZON]` demand mapped through the scaler's target transform.
    pub y: Array2<f64>,
    pub split: Split,
    /// Timestamp of each window's first target hour.
    pub origins: Vec<NaiveDateTime>,
    /// Row of the source series where each window starts.
    pub starts: Vec<usize>,
    pub scaler: ScalerParams,
    /// Scaler column that holds demand.
    pub demand_feature: usize,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.x.len_of(ndarray::Axis(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fractions of windows assigned to train, validation and test, in time order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    /// 80/20 train/test with 30 % of the training part held out for
    /// validation; matches the train-window count reported for the
    /// full-size Ontario file.
    pub const HOLDOUT_IN_TRAIN: SplitRatios = SplitRatios {
        train: 0.56,
        val: 0.24,
        test: 0.20,
    };

    pub fn validate(&self) -> Result<(), DataError> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(DataError::Config(format!(
                "split ratios must all be positive, got {}/{}/{}",
                self.train, self.val, self.test
            )));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DataError::Config(format!(
                "split ratios must sum to 1, got {}",
                parts.iter().sum::<f64>()
            )));
        }
        Ok(())
    }

    /// Partition sizes for `n` items; the test split takes the remainder.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize), DataError> {
        self.validate()?;
        let train = (n as f64 * self.train).round() as usize;
        let val = ((n as f64 * self.val).round() as usize).min(n - train.min(n));
        let test = n.saturating_sub(train + val);
        if train == 0 || val == 0 || test == 0 {
            return Err(DataError::Config(format!(
                "{n} windows split {}/{}/{} leaves an empty partition ({train}/{val}/{test})",
                self.train, self.val, self.test
            )));
        }
        Ok((train, val, test))
    }
}

/// Contiguous windows over a gap-free series: `X[i] = features[i..i+3]`,
/// `Y[i] = demand[i+3..i+27]`.
pub fn make_windows(
    features: &ArrayView2<f64>,
    demand: &[f64],
    input_len: usize,
    horizon: usize,
) -> Result<(Array3<f64>, Array2<f64>), DataError> {
    let t = features.nrows();
    if demand.len() != t {
        return Err(DataError::Config(format!(
            "{t} feature rows but {} demand values",
            demand.len()
        )));
    }
    let need = input_len + horizon;
    if t < need {
        return Err(DataError::TooShort {
            required: need,
            found: t,
        });
    }
    let starts: Vec<usize> = (0..=t - need).collect();
    Ok(gather(features, demand, &starts, input_len, horizon))
}

fn gather(
    features: &ArrayView2<f64>,
    demand: &[f64],
    starts: &[usize],
    input_len: usize,
    horizon: usize,
) -> (Array3<f64>, Array2<f64>) {
    let f = features.ncols();
    let mut x = Array3::zeros((starts.len(), input_len, f));
    let mut y = Array2::zeros((starts.len(), horizon));
    for (k, &s0) in starts.iter().enumerate() {
        x.slice_mut(s![k, .., ..])
            .assign(&features.slice(s![s0..s0 + input_len, ..]));
        for (h, v) in y.row_mut(k).iter_mut().enumerate() {
            *v = demand[s0 + input_len + h];
        }
    }
    (x, y)
}

/// Start rows of every window whose `input_len + horizon` hours are
/// consecutive in `timestamps`.
pub fn window_starts(
    timestamps: &[NaiveDateTime],
    input_len: usize,
    horizon: usize,
) -> Result<Vec<usize>, DataError> {
    let need = input_len + horizon;
    let mut starts = Vec::new();
    // `run` counts consecutive hourly rows ending at `i`.
    let mut run = 0usize;
    for i in 0..timestamps.len() {
        let contiguous = i > 0 && (timestamps[i] - timestamps[i - 1]).num_seconds() == 3600;
        run = if contiguous { run + 1 } else { 1 };
        if run >= need {
            starts.push(i + 1 - need);
        }
    }
    if starts.is_empty() {
        return Err(DataError::TooShort {
            required: need,
            found: longest_run(timestamps),
        });
    }
    Ok(starts)
}

fn longest_run(timestamps: &[NaiveDateTime]) -> usize {
    let mut best = timestamps.len().min(1);
    let mut run = best;
    for w in timestamps.windows(2) {
        run = if (w[1] - w[0]).num_seconds() == 3600 {
            run + 1
        } else {
            1
        };
        best = best.max(run);
    }
    best
}

/// Splits items into consecutive train/val/test runs without reordering.
pub fn chronological_split<T: Clone>(
    items: &[T],
    ratios: SplitRatios,
) -> Result<(Vec<T>, Vec<T>, Vec<T>), DataError> {
    let (train, val, _) = ratios.sizes(items.len())?;
    Ok((
        items[..train].to_vec(),
        items[train..train + val].to_vec(),
        items[train + val..].to_vec(),
    ))
}

/// The three scaled splits and the scaler fitted on the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub train: WindowedDataset,
    pub val: WindowedDataset,
    pub test: WindowedDataset,
    pub scaler: ScalerParams,
}

/// Windows `series`, splits the windows chronologically, fits the scaler on
/// the rows spanned by training windows only, and scales every split with it.
pub fn prepare_dataset(series: &Series, ratios: SplitRatios) -> Result<PreparedData, DataError> {
    let starts = window_starts(&series.timestamps, INPUT_LEN, HORIZON)?;
    let (train_starts, val_starts, test_starts) = chronological_split(&starts, ratios)?;

    let first = train_starts[0];
    let last = *train_starts.last().expect("non-empty") + INPUT_LEN + HORIZON;
    let d = series.demand_feature;
    let mut scaler = fit_scaler(Split::Train, &series.features.slice(s![first..last, ..]))?;
    scaler.fit_target(Split::Train, &series.demand[first..last], d)?;
    let scaled = scaler.scale(&series.features.view());
    let demand: Vec<f64> = series
        .demand
        .iter()
        .map(|v| scaler.scale_target(*v))
        .collect();

    let build = |split: Split, starts: Vec<usize>| {
        let (x, y) = gather(&scaled.view(), &demand, &starts, INPUT_LEN, HORIZON);
        WindowedDataset {
            x,
            y,
            split,
            origins: starts
                .iter()
                .map(|s| series.timestamps[s + INPUT_LEN])
                .collect(),
            starts,
            scaler: scaler.clone(),
            demand_feature: d,
        }
    };
    Ok(PreparedData {
        train: build(Split::Train, train_starts),
        val: build(Split::Val, val_starts),
        test: build(Split::Test, test_starts),
        scaler,
    })
}
