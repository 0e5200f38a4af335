use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{DataError, Split};

/// Below this a column is treated as constant and left unscaled (std = 1).
const MIN_STD: f64 = 1e-12;

/// Per-feature standardisation statistics (population std), plus the affine
/// map applied to forecast targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub target: TargetScale,
}

/// `(v - offset) / scale`. Targets feed a ReLU output, so the offset is the
/// smallest training demand rather than the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub offset: f64,
    pub scale: f64,
}

impl Default for TargetScale {
    fn default() -> Self {
        Self {
            offset: 0.0,
            scale: 1.0,
        }
    }
}

/// Fits on rows tagged `split`, which must be [`Split::Train`].
pub fn fit_scaler(split: Split, rows: &ArrayView2<f64>) -> Result<ScalerParams, DataError> {
    if split != Split::Train {
        return Err(DataError::Leakage(split));
    }
    if rows.nrows() == 0 {
        return Err(DataError::Config("cannot fit a scaler on zero rows".into()));
    }
    let n = rows.nrows() as f64;
    let mut mean = Vec::with_capacity(rows.ncols());
    let mut std = Vec::with_capacity(rows.ncols());
    for (j, col) in rows.axis_iter(Axis(1)).enumerate() {
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let s = var.sqrt();
        mean.push(m);
        if s < MIN_STD || !s.is_finite() {
            log::warn!("feature column {j} is constant ({m}); using std = 1");
            std.push(1.0);
        } else {
            std.push(s);
        }
    }
    Ok(ScalerParams {
        mean,
        std,
        target: TargetScale::default(),
    })
}

impl ScalerParams {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn scale(&self, features: &ArrayView2<f64>) -> Array2<f64> {
        let mut out = features.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| (v - self.mean[j]) / self.std[j]);
        }
        out
    }

    pub fn inverse_scale(&self, scaled: &ArrayView2<f64>) -> Array2<f64> {
        let mut out = scaled.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| v * self.std[j] + self.mean[j]);
        }
        out
    }

    #[inline]
    pub fn scale_value(&self, column: usize, v: f64) -> f64 {
        (v - self.mean[column]) / self.std[column]
    }

    #[inline]
    pub fn inverse_value(&self, column: usize, v: f64) -> f64 {
        v * self.std[column] + self.mean[column]
    }

    /// Sets the target map from the demand column of the fitted rows.
    pub fn fit_target(
        &mut self,
        split: Split,
        demand: &[f64],
        column: usize,
    ) -> Result<(), DataError> {
        if split != Split::Train {
            return Err(DataError::Leakage(split));
        }
        let offset = demand.iter().copied().fold(f64::INFINITY, f64::min);
        if !offset.is_finite() {
            return Err(DataError::Config("cannot fit targets on zero rows".into()));
        }
        self.target = TargetScale {
            offset,
            scale: self.std[column],
        };
        Ok(())
    }

    #[inline]
    pub fn scale_target(&self, v: f64) -> f64 {
        (v - self.target.offset) / self.target.scale
    }

    #[inline]
    pub fn inverse_target(&self, v: f64) -> f64 {
        v * self.target.scale + self.target.offset
    }

    /// A `scaler v1` tag, a `target,offset,scale` line, then one
    /// `index,mean,std` line per feature.
    pub fn to_text(&self) -> String {
        let mut out = String::from("scaler v1\n");
        out.push_str(&format!(
            "target,{:e},{:e}\n",
            self.target.offset, self.target.scale
        ));
        for (j, (m, s)) in self.mean.iter().zip(&self.std).enumerate() {
            out.push_str(&format!("{j},{m:e},{s:e}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, DataError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("scaler v1") {
            return Err(DataError::Config(
                "scaler file must start with `scaler v1`".into(),
            ));
        }
        let bad =
            |n: usize, line: &str| DataError::Config(format!("bad scaler line {n}: `{line}`"));
        let target_line = lines.next().unwrap_or_default();
        let target = match target_line.trim().split(',').collect::<Vec<_>>().as_slice() {
            ["target", o, s] => match (o.parse::<f64>(), s.parse::<f64>()) {
                (Ok(offset), Ok(scale)) if scale > 0.0 => TargetScale { offset, scale },
                _ => return Err(bad(2, target_line)),
            },
            _ => return Err(bad(2, target_line)),
        };
        let mut params = ScalerParams {
            mean: Vec::new(),
            std: Vec::new(),
            target,
        };
        for (k, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let parts: Vec<&str> = line.trim().split(',').collect();
            let parsed = match parts.as_slice() {
                [j, m, s] => j
                    .parse::<usize>()
                    .ok()
                    .filter(|j| *j == k)
                    .and_then(|_| Some((m.parse::<f64>().ok()?, s.parse::<f64>().ok()?))),
                _ => None,
            };
            let (m, s) = parsed
                .filter(|(_, s)| *s > 0.0)
                .ok_or_else(|| bad(k + 3, line))?;
            params.mean.push(m);
            params.std.push(s);
        }
        Ok(params)
    }
}
