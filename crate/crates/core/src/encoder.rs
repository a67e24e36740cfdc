//! GCN encoder with manual backpropagation.
//!
//! Forward, per layer l: `H_{l+1} = ELU(N H_l W_l)` where `N` is the
//! symmetrically normalized adjacency; no activation after the last
//! layer. The final output is batch-normalized per channel to zero mean
//! and unit unbiased variance (no learnable affine), so the covariance
//! `Zᵀ Z / (n-1)` has unit diagonal.
//!
//! Backward chains analytically through batch-norm statistics (mean and
//! variance treated as functions of the batch), the ELU, the weight
//! products, and the aggregation (whose adjoint is aggregation with the
//! same symmetric matrix).

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Denominator guard in the batch-norm standard deviation.
pub const BN_EPSILON: f64 = 1e-5;

/// Stack of GCN layer weights; layer `l` maps `sizes[l] -> sizes[l+1]`.
#[derive(Debug, Clone)]
pub struct GcnModel<S> {
    layers: Vec<DenseMatrix<S>>,
}

impl<S: Scalar> GcnModel<S> {
    pub fn new(layers: Vec<DenseMatrix<S>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].cols() != w[1].rows() {
                return Err(Error::DimensionMismatch(format!(
                    "layer output {} does not feed layer input {}",
                    w[0].cols(),
                    w[1].rows()
                )));
            }
        }
        if layers.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("model weights".into()));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseMatrix<S>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseMatrix<S>] {
        &mut self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// `[input, hidden..., output]` dimensions.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].rows()];
        sizes.extend(self.layers.iter().map(DenseMatrix::cols));
        sizes
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").cols()
    }
}

/// Glorot-uniform initialization: entries in
/// `±sqrt(6 / (fan_in + fan_out))`, deterministic per stream.
pub fn glorot_init<S: Scalar>(layer_sizes: &[usize], stream: &mut RngStream) -> Result<GcnModel<S>> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidArgument("need at least input and output sizes".into()));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidArgument("layer sizes must be positive".into()));
    }
    let mut layers = Vec::with_capacity(layer_sizes.len() - 1);
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut m = DenseMatrix::zeros(fan_in, fan_out);
        for v in m.data_mut() {
            *v = S::cast((2.0 * stream.next_f64() - 1.0) * bound);
        }
        layers.push(m);
    }
    GcnModel::new(layers)
}

#[inline]
fn elu<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        x
    } else {
        x.exp() - S::one()
    }
}

#[inline]
fn elu_grad<S: Scalar>(pre: S) -> S {
    if pre >= S::zero() {
        S::one()
    } else {
        pre.exp()
    }
}

/// Per-channel statistics captured by the batch-norm forward pass.
#[derive(Debug, Clone)]
pub struct BnCache<S> {
    rows: usize,
    inv_std: Vec<S>,
    normalized: DenseMatrix<S>,
}

impl<S: Scalar> BnCache<S> {
    pub fn normalized(&self) -> &DenseMatrix<S> {
        &self.normalized
    }
}

/// Standardizes each column to zero mean and unit unbiased variance:
/// `z[:,j] = (h[:,j] - mean_j) / sqrt(var_j + eps)` with `var` divided by
/// `n - 1`. A batch of fewer than two rows yields all zeros (the mean
/// removal degenerates); constant columns also map to zero.
pub fn batch_norm<S: Scalar>(h: &DenseMatrix<S>) -> (DenseMatrix<S>, BnCache<S>) {
    let (n, d) = (h.rows(), h.cols());
    if n < 2 {
        let z = DenseMatrix::zeros(n, d);
        let cache = BnCache { rows: n, inv_std: vec![S::zero(); d], normalized: z.clone() };
        return (z, cache);
    }
    let nf = S::cast(n as f64);
    let nm1 = S::cast((n - 1) as f64);
    let eps = S::cast(BN_EPSILON);

    let mut mean = vec![S::zero(); d];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(h.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nf;
    }
    let mut var = vec![S::zero(); d];
    for i in 0..n {
        for ((s, &v), &m) in var.iter_mut().zip(h.row(i)).zip(&mean) {
            let c = v - m;
            *s += c * c;
        }
    }
    let inv_std: Vec<S> = var.iter().map(|&s| S::one() / (s / nm1 + eps).sqrt()).collect();

    let mut z = DenseMatrix::zeros(n, d);
    for i in 0..n {
        let hrow = h.row(i);
        let zrow = z.row_mut(i);
        for j in 0..d {
            zrow[j] = (hrow[j] - mean[j]) * inv_std[j];
        }
    }
    let cache = BnCache { rows: n, inv_std, normalized: z.clone() };
    (z, cache)
}

/// Gradient through the batch-norm statistics:
/// `dh_i = inv_std * (g_i - mean(g) - z_i * <g, z> / (n-1))` per channel.
pub fn batch_norm_backward<S: Scalar>(cache: &BnCache<S>, grad_z: &DenseMatrix<S>) -> Result<DenseMatrix<S>> {
    let n = cache.rows;
    let d = cache.inv_std.len();
    if grad_z.rows() != n || grad_z.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "batch_norm_backward: cache is {n}x{d}, grad is {}x{}",
            grad_z.rows(),
            grad_z.cols()
        )));
    }
    if n < 2 {
        return Ok(DenseMatrix::zeros(n, d));
    }
    let nf = S::cast(n as f64);
    let nm1 = S::cast((n - 1) as f64);

    let mut gmean = vec![S::zero(); d];
    let mut gz = vec![S::zero(); d];
    for i in 0..n {
        let g = grad_z.row(i);
        let z = cache.normalized.row(i);
        for j in 0..d {
            gmean[j] += g[j];
            gz[j] += g[j] * z[j];
        }
    }
    for j in 0..d {
        gmean[j] /= nf;
        gz[j] /= nm1;
    }
    let mut out = DenseMatrix::zeros(n, d);
    for i in 0..n {
        let g = grad_z.row(i);
        let z = cache.normalized.row(i);
        let o = out.row_mut(i);
        for j in 0..d {
            o[j] = cache.inv_std[j] * (g[j] - gmean[j] - z[j] * gz[j]);
        }
    }
    Ok(out)
}

/// Intermediates retained by [`gcn_forward`] for the matching backward
/// pass: the aggregated input and pre-activation of every layer plus the
/// batch-norm cache.
#[derive(Debug, Clone)]
pub struct ForwardTape<S> {
    aggregated: Vec<DenseMatrix<S>>,
    pre_activation: Vec<DenseMatrix<S>>,
    bn: BnCache<S>,
}

/// Runs the encoder: aggregation, weights, ELU between layers, batch norm
/// on the output. Returns the normalized representations and the tape for
/// [`backward`].
pub fn gcn_forward<S: Scalar>(
    model: &GcnModel<S>,
    adj_norm: &CsrGraph<S>,
    x: &DenseMatrix<S>,
) -> Result<(DenseMatrix<S>, ForwardTape<S>)> {
    let layers = model.num_layers();
    let mut aggregated = Vec::with_capacity(layers);
    let mut pre_activation = Vec::with_capacity(layers);

    let mut h = x.clone();
    for (l, weight) in model.layers().iter().enumerate() {
        let p = adj_norm.spmm(&h)?;
        let pre = p.matmul(weight)?;
        aggregated.push(p);
        h = if l + 1 == layers {
            pre.clone()
        } else {
            let mut act = pre.clone();
            for v in act.data_mut() {
                *v = elu(*v);
            }
            act
        };
        pre_activation.push(pre);
    }
    let (z, bn) = batch_norm(&h);
    if !z.is_finite() {
        return Err(Error::NonFinite("encoder output".into()));
    }
    Ok((z, ForwardTape { aggregated, pre_activation, bn }))
}

/// Analytic gradients of a scalar loss with respect to every layer weight,
/// given the loss gradient at the normalized output. `adj_norm` must be
/// the graph used by the matching forward pass.
pub fn backward<S: Scalar>(
    model: &GcnModel<S>,
    adj_norm: &CsrGraph<S>,
    tape: &ForwardTape<S>,
    grad_z: &DenseMatrix<S>,
) -> Result<Vec<DenseMatrix<S>>> {
    let layers = model.num_layers();
    if tape.aggregated.len() != layers || tape.pre_activation.len() != layers {
        return Err(Error::DimensionMismatch("tape does not match model depth".into()));
    }

    let mut grads: Vec<DenseMatrix<S>> = Vec::with_capacity(layers);
    // dL/dH at the final (pre-batch-norm) activations.
    let mut g = batch_norm_backward(&tape.bn, grad_z)?;
    for l in (0..layers).rev() {
        let g_pre = if l + 1 == layers {
            g
        } else {
            let mut gp = g;
            for (v, &pre) in gp.data_mut().iter_mut().zip(tape.pre_activation[l].data()) {
                *v *= elu_grad(pre);
            }
            gp
        };
        grads.push(tape.aggregated[l].at_b(&g_pre)?);
        g = if l > 0 {
            adj_norm.spmm(&g_pre.a_bt(&model.layers()[l])?)?
        } else {
            DenseMatrix::zeros(0, 0)
        };
    }
    grads.reverse();
    Ok(grads)
}
