use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayView3, Axis, Zip};
use rand::Rng;

use super::{shape_err, sigmoid, ModelError};

/// First line of a serialized model.
pub const MODEL_FORMAT_TAG: &str = "gru-model v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruShape {
    /// Timesteps per input window.
    pub steps: usize,
    /// Features per timestep.
    pub input: usize,
    pub hidden: usize,
    /// Forecast horizon.
    pub output: usize,
}

impl Default for GruShape {
    fn default() -> Self {
        Self {
            steps: 3,
            input: 8,
            hidden: 64,
            output: 24,
        }
    }
}

/// Input weights, recurrent weights and bias of one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub w: Array2<f64>,
    pub u: Array2<f64>,
    pub b: Array1<f64>,
}

impl GateParams {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Array2::zeros((input, hidden)),
            u: Array2::zeros((hidden, hidden)),
            b: Array1::zeros(hidden),
        }
    }

    /// `x W + h U + b`
    fn preactivation(&self, x: &ArrayView2<f64>, h: &ArrayView2<f64>) -> Array2<f64> {
        let mut a = x.dot(&self.w);
        a += &h.dot(&self.u);
        a += &self.b;
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruModel {
    shape: GruShape,
    pub update: GateParams,
    pub reset: GateParams,
    pub candidate: GateParams,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

/// Activations of one cell step, kept for backpropagation.
pub(crate) struct StepCache {
    pub h_prev: Array2<f64>,
    pub z: Array2<f64>,
    pub r: Array2<f64>,
    pub h_cand: Array2<f64>,
}

/// Everything a batched forward pass produces.
pub(crate) struct ForwardTrace {
    pub steps: Vec<StepCache>,
    pub h_last: Array2<f64>,
    /// Dense pre-activation, `[batch, output]`.
    pub pre_out: Array2<f64>,
    pub output: Array2<f64>,
}

impl GruModel {
    /// All parameters zero.
    pub fn zeros(shape: GruShape) -> Self {
        Self {
            shape,
            update: GateParams::zeros(shape.input, shape.hidden),
            reset: GateParams::zeros(shape.input, shape.hidden),
            candidate: GateParams::zeros(shape.input, shape.hidden),
            w_out: Array2::zeros((shape.hidden, shape.output)),
            b_out: Array1::zeros(shape.output),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(shape: GruShape, rng: &mut R) -> Self {
        let mut m = Self::zeros(shape);
        let mut glorot = |a: &mut Array2<f64>| {
            let (fan_in, fan_out) = a.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            a.mapv_inplace(|_| rng.random_range(-limit..limit));
        };
        for gate in [&mut m.update, &mut m.reset, &mut m.candidate] {
            glorot(&mut gate.w);
            glorot(&mut gate.u);
        }
        glorot(&mut m.w_out);
        m
    }

    pub fn shape(&self) -> GruShape {
        self.shape
    }

    /// Parameter tensors in a fixed order, as flat slices.
    pub fn tensors(&self) -> [(&'static str, &[f64]); 11] {
        [
            ("update.w", flat(&self.update.w)),
            ("update.u", flat(&self.update.u)),
            ("update.b", self.update.b.as_slice().expect("contiguous")),
            ("reset.w", flat(&self.reset.w)),
            ("reset.u", flat(&self.reset.u)),
            ("reset.b", self.reset.b.as_slice().expect("contiguous")),
            ("candidate.w", flat(&self.candidate.w)),
            ("candidate.u", flat(&self.candidate.u)),
            (
                "candidate.b",
                self.candidate.b.as_slice().expect("contiguous"),
            ),
            ("out.w", flat(&self.w_out)),
            ("out.b", self.b_out.as_slice().expect("contiguous")),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 11] {
        [
            ("update.w", flat_mut(&mut self.update.w)),
            ("update.u", flat_mut(&mut self.update.u)),
            (
                "update.b",
                self.update.b.as_slice_mut().expect("contiguous"),
            ),
            ("reset.w", flat_mut(&mut self.reset.w)),
            ("reset.u", flat_mut(&mut self.reset.u)),
            ("reset.b", self.reset.b.as_slice_mut().expect("contiguous")),
            ("candidate.w", flat_mut(&mut self.candidate.w)),
            ("candidate.u", flat_mut(&mut self.candidate.u)),
            (
                "candidate.b",
                self.candidate.b.as_slice_mut().expect("contiguous"),
            ),
            ("out.w", flat_mut(&mut self.w_out)),
            ("out.b", self.b_out.as_slice_mut().expect("contiguous")),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn cell_step(
        &self,
        x: &ArrayView2<f64>,
        h_prev: Array2<f64>,
    ) -> (Array2<f64>, StepCache) {
        let hv = h_prev.view();
        let z = self.update.preactivation(x, &hv).mapv_into(sigmoid);
        let r = self.reset.preactivation(x, &hv).mapv_into(sigmoid);
        let rh = &r * &h_prev;
        let mut h_cand = x.dot(&self.candidate.w);
        h_cand += &rh.dot(&self.candidate.u);
        h_cand += &self.candidate.b;
        h_cand.mapv_inplace(f64::tanh);
        let mut h = Array2::zeros(h_prev.raw_dim());
        Zip::from(&mut h)
            .and(&z)
            .and(&h_prev)
            .and(&h_cand)
            .for_each(|h, &z, &hp, &hc| *h = (1.0 - z) * hp + z * hc);
        (
            h,
            StepCache {
                h_prev,
                z,
                r,
                h_cand,
            },
        )
    }

    pub(crate) fn check_batch(&self, x: &ArrayView3<f64>) -> Result<(), ModelError> {
        let (_, steps, input) = x.dim();
        if steps != self.shape.steps || input != self.shape.input {
            return Err(shape_err(
                "input windows [batch, steps, features]",
                &[x.len_of(Axis(0)), self.shape.steps, self.shape.input],
                &[x.len_of(Axis(0)), steps, input],
            ));
        }
        Ok(())
    }

    pub(crate) fn forward_trace(&self, x: &ArrayView3<f64>) -> ForwardTrace {
        let batch = x.len_of(Axis(0));
        let mut h = Array2::zeros((batch, self.shape.hidden));
        let mut steps = Vec::with_capacity(self.shape.steps);
        for t in 0..self.shape.steps {
            let xt = x.index_axis(Axis(1), t);
            let (next, cache) = self.cell_step(&xt, h);
            steps.push(cache);
            h = next;
        }
        let mut pre_out = h.dot(&self.w_out);
        pre_out += &self.b_out;
        let output = pre_out.mapv(|v| v.max(0.0));
        ForwardTrace {
            steps,
            h_last: h,
            pre_out,
            output,
        }
    }

    /// Predictions for a batch of windows `[batch, steps, input]`, giving `[batch, output]`.
    pub fn predict_batch(&self, x: &ArrayView3<f64>) -> Result<Array2<f64>, ModelError> {
        self.check_batch(x)?;
        Ok(self.forward_trace(x).output)
    }

    /// Prediction for one `[steps, input]` window.
    pub fn forward(&self, window: &ArrayView2<f64>) -> Result<Array1<f64>, ModelError> {
        let (steps, input) = window.dim();
        if (steps, input) != (self.shape.steps, self.shape.input) {
            return Err(shape_err(
                "input window [steps, features]",
                &[self.shape.steps, self.shape.input],
                &[steps, input],
            ));
        }
        let batch = window.insert_axis(Axis(0));
        Ok(self
            .forward_trace(&batch)
            .output
            .index_axis_move(Axis(0), 0))
    }

    /// Same as [`forward`](Self::forward); outputs are in the scaled domain.
    pub fn predict_horizon(&self, window: &ArrayView2<f64>) -> Result<Array1<f64>, ModelError> {
        self.forward(window)
    }

    /// Text serialization. Floats are written in shortest round-trip form, so
    /// [`from_text`](Self::from_text) restores every weight bit for bit.
    pub fn to_text(&self) -> String {
        let s = self.shape;
        let mut out = format!(
            "{MODEL_FORMAT_TAG}\nshape {} {} {} {}\n",
            s.steps, s.input, s.hidden, s.output
        );
        for (name, values) in self.tensors() {
            let _ = write!(out, "{name} {}\n", values.len());
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| ModelError::Parse {
                line: 0,
                reason: format!("unexpected end of file, expected {what}"),
            })
        };
        let (n, tag) = next("format tag")?;
        if tag != MODEL_FORMAT_TAG {
            return Err(ModelError::Parse {
                line: n,
                reason: format!("expected `{MODEL_FORMAT_TAG}`, found `{tag}`"),
            });
        }
        let (n, shape_line) = next("shape header")?;
        let dims: Vec<usize> = shape_line
            .strip_prefix("shape ")
            .map(|rest| {
                rest.split_whitespace()
                    .filter_map(|t| t.parse().ok())
                    .collect()
            })
            .unwrap_or_default();
        if dims.len() != 4 || dims.contains(&0) {
            return Err(ModelError::Parse {
                line: n,
                reason: "expected `shape <steps> <input> <hidden> <output>`".into(),
            });
        }
        let mut model = Self::zeros(GruShape {
            steps: dims[0],
            input: dims[1],
            hidden: dims[2],
            output: dims[3],
        });
        for (name, slot) in model.tensors_mut() {
            let (n, header) = next(name)?;
            let expected = format!("{name} {}", slot.len());
            if header != expected {
                return Err(ModelError::Parse {
                    line: n,
                    reason: format!("expected `{expected}`, found `{header}`"),
                });
            }
            let (n, body) = next(name)?;
            let mut count = 0;
            for (k, token) in body.split_whitespace().enumerate() {
                let v: f64 = token.parse().map_err(|_| ModelError::Parse {
                    line: n,
                    reason: format!("bad number `{token}`"),
                })?;
                if k < slot.len() {
                    slot[k] = v;
                }
                count += 1;
            }
            if count != slot.len() {
                return Err(ModelError::Parse {
                    line: n,
                    reason: format!("{name}: expected {} values, found {count}", slot.len()),
                });
            }
        }
        Ok(model)
    }
}

fn flat(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

fn flat_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

/// One cell step for a single input vector.
pub fn gru_cell_forward(
    x_t: &ArrayView1<f64>,
    h_prev: &ArrayView1<f64>,
    model: &GruModel,
) -> Result<Array1<f64>, ModelError> {
    let s = model.shape();
    if x_t.len() != s.input {
        return Err(shape_err("x_t", &[s.input], &[x_t.len()]));
    }
    if h_prev.len() != s.hidden {
        return Err(shape_err("h_prev", &[s.hidden], &[h_prev.len()]));
    }
    let x = x_t.insert_axis(Axis(0));
    let h = h_prev.to_owned().insert_axis(Axis(0));
    let (h, _) = model.cell_step(&x, h);
    Ok(h.index_axis_move(Axis(0), 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metaheuristics::seeded_rng;
    use ndarray::{Array, Array3};

    fn small() -> GruShape {
        GruShape {
            steps: 3,
            input: 2,
            hidden: 2,
            output: 3,
        }
    }

    #[test]
    fn zero_model_halves_hidden_state() {
        let m = GruModel::zeros(GruShape::default());
        let x = Array1::from_elem(8, 0.7);
        let h = Array1::linspace(-1.0, 1.0, 64);
        let out = gru_cell_forward(&x.view(), &h.view(), &m).unwrap();
        for (o, p) in out.iter().zip(h.iter()) {
            assert_eq!(*o, 0.5 * p);
        }
        let zero = gru_cell_forward(&x.view(), &Array1::zeros(64).view(), &m).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn saturated_update_gate_takes_candidate() {
        let mut rng = seeded_rng(4);
        let mut m = GruModel::init(small(), &mut rng);
        m.update.b.fill(50.0);
        let x = Array1::from(vec![0.3, -0.8]);
        let h = Array1::from(vec![0.9, -0.4]);
        let out = gru_cell_forward(&x.view(), &h.view(), &m).unwrap();
        // h~ computed independently
        let r: Vec<f64> = (0..2)
            .map(|j| {
                sigmoid(
                    x[0] * m.reset.w[[0, j]]
                        + x[1] * m.reset.w[[1, j]]
                        + h[0] * m.reset.u[[0, j]]
                        + h[1] * m.reset.u[[1, j]]
                        + m.reset.b[j],
                )
            })
            .collect();
        for j in 0..2 {
            let hc = (x[0] * m.candidate.w[[0, j]]
                + x[1] * m.candidate.w[[1, j]]
                + r[0] * h[0] * m.candidate.u[[0, j]]
                + r[1] * h[1] * m.candidate.u[[1, j]]
                + m.candidate.b[j])
                .tanh();
            assert!((out[j] - hc).abs() < 1e-12, "{} vs {}", out[j], hc);
        }
    }

    #[test]
    fn zero_model_zero_window_predicts_zeros() {
        let m = GruModel::zeros(GruShape::default());
        let y = m.forward(&Array2::zeros((3, 8)).view()).unwrap();
        assert_eq!(y.len(), 24);
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn wrong_window_shape_is_rejected() {
        let m = GruModel::zeros(GruShape::default());
        assert!(m.forward(&Array2::zeros((4, 8)).view()).is_err());
        assert!(m.forward(&Array2::zeros((3, 7)).view()).is_err());
        assert!(m.predict_batch(&Array3::zeros((2, 3, 9)).view()).is_err());
    }

    #[test]
    fn hand_unrolled_two_unit_trace() {
        let mut rng = seeded_rng(21);
        let mut m = GruModel::init(small(), &mut rng);
        m.update.b.assign(&Array1::from(vec![0.1, -0.2]));
        m.reset.b.assign(&Array1::from(vec![-0.3, 0.05]));
        m.candidate.b.assign(&Array1::from(vec![0.2, 0.0]));
        m.b_out.assign(&Array1::from(vec![0.4, -0.1, 0.05]));
        let window = Array::from_shape_vec((3, 2), vec![0.5, -1.0, 1.5, 0.2, -0.7, 0.9]).unwrap();

        // scalar reference
        let mut h = [0.0f64; 2];
        for t in 0..3 {
            let x = [window[[t, 0]], window[[t, 1]]];
            let lin = |g: &GateParams, hv: [f64; 2], j: usize| {
                x[0] * g.w[[0, j]]
                    + x[1] * g.w[[1, j]]
                    + hv[0] * g.u[[0, j]]
                    + hv[1] * g.u[[1, j]]
                    + g.b[j]
            };
            let z = [sigmoid(lin(&m.update, h, 0)), sigmoid(lin(&m.update, h, 1))];
            let r = [sigmoid(lin(&m.reset, h, 0)), sigmoid(lin(&m.reset, h, 1))];
            let rh = [r[0] * h[0], r[1] * h[1]];
            let hc = [
                lin(&m.candidate, rh, 0).tanh(),
                lin(&m.candidate, rh, 1).tanh(),
            ];
            h = [
                (1.0 - z[0]) * h[0] + z[0] * hc[0],
                (1.0 - z[1]) * h[1] + z[1] * hc[1],
            ];
        }
        let expected: Vec<f64> = (0..3)
            .map(|k| (h[0] * m.w_out[[0, k]] + h[1] * m.w_out[[1, k]] + m.b_out[k]).max(0.0))
            .collect();
        let got = m.forward(&window.view()).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-14, "{g} vs {e}");
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut rng = seeded_rng(8);
        let m = GruModel::init(GruShape::default(), &mut rng);
        let back = GruModel::from_text(&m.to_text()).unwrap();
        for ((_, a), (_, b)) in m.tensors().iter().zip(back.tensors().iter()) {
            assert!(a
                .iter()
                .zip(b.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(back.shape(), m.shape());
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert!(GruModel::from_text("nope").is_err());
        let m = GruModel::zeros(small());
        let text = m.to_text().replacen("update.u 4", "update.u 5", 1);
        assert!(matches!(
            GruModel::from_text(&text),
            Err(ModelError::Parse { line: 5, .. })
        ));
        let truncated: String = m.to_text().lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(GruModel::from_text(&truncated).is_err());
    }

    #[test]
    fn parameter_count_for_default_shape() {
        let m = GruModel::zeros(GruShape::default());
        assert_eq!(
            m.parameter_count(),
            3 * (8 * 64 + 64 * 64 + 64) + 64 * 24 + 24
        );
    }
}
