use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::params::{ModelParams, ModelSpec};

/// Cached layer outputs of one forward pass.
///
/// `activations[0]` is the input batch and `activations[i]` the post-activation
/// output of layer `i - 1`; the last entry holds the logits.
#[derive(Debug, Clone)]
pub struct Forward {
    pub activations: Vec<Matrix>,
}

impl Forward {
    pub fn logits(&self) -> &Matrix {
        self.activations.last().expect("forward pass always stores the input")
    }

    pub fn into_logits(mut self) -> Matrix {
        self.activations.pop().expect("forward pass always stores the input")
    }
}

pub fn forward(params: &ModelParams, spec: &ModelSpec, x: &Matrix) -> Result<Forward> {
    forward_layers(params, spec, x, spec.num_layers())
}

/// Runs only the first `depth` layers. Used to read the autoencoder bottleneck.
pub(crate) fn forward_layers(params: &ModelParams, spec: &ModelSpec, x: &Matrix, depth: usize) -> Result<Forward> {
    params.check(spec)?;
    if x.cols() != spec.input_dim() {
        return Err(Error::dim("layer 0 input", spec.input_dim(), x.cols()));
    }
    let mut activations = Vec::with_capacity(depth + 1);
    activations.push(x.clone());
    for (i, (layer, &act)) in params.layers.iter().zip(spec.activations()).take(depth).enumerate() {
        let input = &activations[i];
        let mut z = input.matmul_transposed(&layer.weights)?;
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                *v = act.apply(*v + b);
            }
        }
        activations.push(z);
    }
    Ok(Forward { activations })
}

/// Back-propagates `d_out`, the loss gradient with respect to the network output,
/// through a cached forward pass. Returns parameter gradients and the gradient
/// with respect to the input batch.
pub fn backprop(
    params: &ModelParams,
    spec: &ModelSpec,
    fwd: &Forward,
    d_out: &Matrix,
) -> Result<(ModelParams, Matrix)> {
    let n_layers = spec.num_layers();
    if fwd.activations.len() != n_layers + 1 {
        return Err(Error::dim("forward cache", n_layers + 1, fwd.activations.len()));
    }
    if d_out.shape() != fwd.logits().shape() {
        return Err(Error::dim(
            "output gradient",
            format!("{:?}", fwd.logits().shape()),
            format!("{:?}", d_out.shape()),
        ));
    }
    let mut grads = params.zeros_like();
    let mut delta = d_out.clone();
    for l in (0..n_layers).rev() {
        let act = spec.activations()[l];
        let a_out = &fwd.activations[l + 1];
        let a_in = &fwd.activations[l];
        for (d, &a) in delta.as_mut_slice().iter_mut().zip(a_out.as_slice()) {
            *d *= act.derivative_from_output(a);
        }
        let g = &mut grads.layers[l];
        for b in 0..delta.rows() {
            let dz = delta.row(b);
            let x = a_in.row(b);
            for (o, &d) in dz.iter().enumerate() {
                g.bias[o] += d;
                if d != 0.0 {
                    for (w, &xi) in g.weights.row_mut(o).iter_mut().zip(x) {
                        *w += d * xi;
                    }
                }
            }
        }
        delta = delta.matmul(&params.layers[l].weights)?;
    }
    Ok((grads, delta))
}

fn check_labels(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::dim("labels", x.rows(), y.len()));
    }
    if let Some(pos) = y.iter().position(|&v| v > 1) {
        return Err(Error::Validation(format!("label {} at row {pos} is not 0 or 1", y[pos])));
    }
    Ok(())
}

fn log_softmax_row(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    row.iter().map(|v| v - lse).collect()
}

pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let lp = log_softmax_row(logits.row(r));
        for (o, l) in out.row_mut(r).iter_mut().zip(lp) {
            *o = l.exp();
        }
    }
    out
}

/// Mean cross-entropy over the batch and its gradient with respect to the logits.
pub(crate) fn cross_entropy_grad(logits: &Matrix, y: &[u8]) -> (f64, Matrix) {
    let n = logits.rows() as f64;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for (r, &label) in y.iter().enumerate() {
        let lp = log_softmax_row(logits.row(r));
        loss -= lp[label as usize];
        for (k, (g, l)) in grad.row_mut(r).iter_mut().zip(&lp).enumerate() {
            let target = if k == label as usize { 1.0 } else { 0.0 };
            *g = (l.exp() - target) / n;
        }
    }
    (loss / n, grad)
}

/// Mean squared error averaged over all entries, and its gradient.
pub(crate) fn mse_grad(output: &Matrix, target: &Matrix) -> (f64, Matrix) {
    let count = output.as_slice().len().max(1) as f64;
    let mut grad = output.clone();
    let mut loss = 0.0;
    for (g, &t) in grad.as_mut_slice().iter_mut().zip(target.as_slice()) {
        let diff = *g - t;
        loss += diff * diff;
        *g = 2.0 * diff / count;
    }
    (loss / count, grad)
}

/// Gradient of the mean cross-entropy with respect to every weight and bias.
pub fn backward(params: &ModelParams, spec: &ModelSpec, x: &Matrix, y: &[u8]) -> Result<ModelParams> {
    check_labels(x, y)?;
    let fwd = forward(params, spec, x)?;
    let (_, d_logits) = cross_entropy_grad(fwd.logits(), y);
    Ok(backprop(params, spec, &fwd, &d_logits)?.0)
}

pub fn cross_entropy(params: &ModelParams, spec: &ModelSpec, x: &Matrix, y: &[u8]) -> Result<f64> {
    check_labels(x, y)?;
    let fwd = forward(params, spec, x)?;
    Ok(cross_entropy_grad(fwd.logits(), y).0)
}

pub fn mse_loss(params: &ModelParams, spec: &ModelSpec, x: &Matrix, target: &Matrix) -> Result<f64> {
    let fwd = forward(params, spec, x)?;
    if fwd.logits().shape() != target.shape() {
        return Err(Error::dim(
            "reconstruction target",
            format!("{:?}", fwd.logits().shape()),
            format!("{:?}", target.shape()),
        ));
    }
    Ok(mse_grad(fwd.logits(), target).0)
}

/// Class predictions from the two logits; a tie goes to benign (0).
pub fn predict(params: &ModelParams, spec: &ModelSpec, x: &Matrix) -> Result<Vec<u8>> {
    let logits = forward(params, spec, x)?.into_logits();
    if logits.cols() != 2 {
        return Err(Error::dim("classifier output", 2, logits.cols()));
    }
    Ok(logits.iter_rows().map(|r| u8::from(r[1] > r[0])).collect())
}
