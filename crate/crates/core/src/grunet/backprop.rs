//! Backpropagation through time for batch MSE.

use ndarray::{Array2, ArrayView2, ArrayView3, Axis, Zip};

use super::model::GateParams;
use super::{shape_err, GruModel, ModelError};

/// Accumulates `dW += x^T da`, `dU += h^T da`, `db += sum_rows(da)`.
fn accumulate(grad: &mut GateParams, x: &ArrayView2<f64>, h: &ArrayView2<f64>, da: &Array2<f64>) {
    grad.w += &x.t().dot(da);
    grad.u += &h.t().dot(da);
    grad.b += &da.sum_axis(Axis(0));
}

/// Batch MSE and its exact gradient with respect to every parameter.
/// The gradient is returned as a model of the same shape.
pub fn loss_and_gradients(
    model: &GruModel,
    x: &ArrayView3<f64>,
    y: &ArrayView2<f64>,
) -> Result<(f64, GruModel), ModelError> {
    model.check_batch(x)?;
    let shape = model.shape();
    let batch = x.len_of(Axis(0));
    if y.dim() != (batch, shape.output) {
        return Err(shape_err(
            "targets [batch, output]",
            &[batch, shape.output],
            &[y.nrows(), y.ncols()],
        ));
    }
    let mut grads = GruModel::zeros(shape);
    if batch == 0 {
        return Ok((0.0, grads));
    }
    let trace = model.forward_trace(x);
    let count = (batch * shape.output) as f64;

    let residual = &trace.output - y;
    let loss = residual.iter().map(|r| r * r).sum::<f64>() / count;

    // dL/d(pre_out), ReLU gate with derivative 0 at 0.
    let mut d_out = residual * (2.0 / count);
    Zip::from(&mut d_out).and(&trace.pre_out).for_each(|d, &a| {
        if a <= 0.0 {
            *d = 0.0;
        }
    });
    grads.w_out = trace.h_last.t().dot(&d_out);
    grads.b_out = d_out.sum_axis(Axis(0));
    let mut dh = d_out.dot(&model.w_out.t());

    for (t, step) in trace.steps.iter().enumerate().rev() {
        let xt = x.index_axis(Axis(1), t);
        let hp = &step.h_prev;

        // h = (1 - z) h_prev + z h~
        let mut da_z = Array2::zeros(dh.raw_dim());
        let mut da_h = Array2::zeros(dh.raw_dim());
        let mut dh_prev = Array2::zeros(dh.raw_dim());
        Zip::from(&mut da_z)
            .and(&dh)
            .and(&step.z)
            .and(hp)
            .and(&step.h_cand)
            .for_each(|daz, &d, &z, &h_prev, &hc| *daz = d * (hc - h_prev) * z * (1.0 - z));
        Zip::from(&mut da_h)
            .and(&mut dh_prev)
            .and(&dh)
            .and(&step.z)
            .and(&step.h_cand)
            .for_each(|dah, dhp, &d, &z, &hc| {
                *dah = d * z * (1.0 - hc * hc);
                *dhp = d * (1.0 - z);
            });

        // h~ = tanh(x W_h + (r * h_prev) U_h + b_h)
        let rh = &step.r * hp;
        accumulate(&mut grads.candidate, &xt, &rh.view(), &da_h);
        let d_rh = da_h.dot(&model.candidate.u.t());
        let mut da_r = Array2::zeros(dh.raw_dim());
        Zip::from(&mut da_r)
            .and(&mut dh_prev)
            .and(&d_rh)
            .and(&step.r)
            .and(hp)
            .for_each(|dar, dhp, &drh, &r, &h_prev| {
                *dar = drh * h_prev * r * (1.0 - r);
                *dhp += drh * r;
            });

        accumulate(&mut grads.update, &xt, &hp.view(), &da_z);
        accumulate(&mut grads.reset, &xt, &hp.view(), &da_r);
        dh_prev += &da_z.dot(&model.update.u.t());
        dh_prev += &da_r.dot(&model.reset.u.t());
        dh = dh_prev;
    }
    Ok((loss, grads))
}

/// Gradient of batch MSE, shaped like the model.
pub fn backward(
    x: &ArrayView3<f64>,
    y: &ArrayView2<f64>,
    model: &GruModel,
) -> Result<GruModel, ModelError> {
    loss_and_gradients(model, x, y).map(|(_, g)| g)
}
