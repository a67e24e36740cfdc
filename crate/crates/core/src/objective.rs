//! Training objective and distribution diagnostics.
//!
//! The loss pulls two views' representations together (alignment) and
//! pushes each view's covariance toward the identity (uniformity). The
//! uniformity term is the squared Gaussian 2-Wasserstein distance between
//! `N(0, Sigma)` and `N(0, I)`, evaluated as
//! `Tr(Sigma) + d - 2 Tr(Sigma^{1/2})`; for batch-normalized input
//! (`diag(Sigma) = 1`) this equals `2d - 2 Tr(Sigma^{1/2})`, but the full
//! form keeps the gradient self-consistent for arbitrary input.
//!
//! Gradients are closed-form. With `Sigma = ZᵀZ/(n-1)`:
//! alignment `-Tr(Z1ᵀZ2)/n` has gradients `-Z2/n` and `-Z1/n`; the
//! uniformity gradient is `(2Z - 2 Z Sigma^{-1/2}) / (n-1)`, with the
//! inverse square root clamped at a configurable eigenvalue floor because
//! `d(-Tr(Sigma^{1/2}))/d(lambda) = -1/(2 sqrt(lambda))` diverges as an
//! eigenvalue approaches zero.

use crate::dense::DenseMatrix;
use crate::eig::{eig_sym, spectral_rebuild, SymEig};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Mean and covariance of a Gaussian; inputs to the closed-form
/// 2-Wasserstein distance.
#[derive(Debug, Clone)]
pub struct GaussianMoments<S> {
    pub mean: Vec<S>,
    pub covariance: DenseMatrix<S>,
}

impl<S: Scalar> GaussianMoments<S> {
    pub fn new(mean: Vec<S>, covariance: DenseMatrix<S>) -> Result<Self> {
        if covariance.rows() != covariance.cols() || covariance.rows() != mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "moments: mean of length {} with {}x{} covariance",
                mean.len(),
                covariance.rows(),
                covariance.cols()
            )));
        }
        let mut worst = S::zero();
        for i in 0..covariance.rows() {
            for j in (i + 1)..covariance.cols() {
                worst = worst.max((covariance.get(i, j) - covariance.get(j, i)).abs());
            }
        }
        if worst > S::cast(1e-9) {
            return Err(Error::NotSymmetric(worst.to_f64_lossy()));
        }
        Ok(Self { mean, covariance })
    }
}

/// Scalar summary of one loss evaluation, including the collapse
/// diagnostics exported per epoch.
#[derive(Debug, Clone, Copy)]
pub struct LossBreakdown<S> {
    /// Raw alignment value `-Tr(Z1ᵀZ2)/n`.
    pub align: S,
    /// Mean of the two views' uniformity values.
    pub uniform: S,
    /// `align_weight * align + lambda * uniform`, composed exactly.
    pub total: S,
    pub lambda: S,
    pub align_weight: S,
    /// Smallest eigenvalue of the first view's covariance.
    pub min_eigenvalue: S,
    /// Mean absolute off-diagonal entry of the first view's covariance.
    pub offdiag_mean_abs: S,
}

/// `Sigma = ZᵀZ / (n-1)`; exact symmetry by construction.
pub fn covariance<S: Scalar>(z: &DenseMatrix<S>) -> Result<DenseMatrix<S>> {
    if z.rows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "covariance needs at least 2 rows, got {}",
            z.rows()
        )));
    }
    let mut cov = z.at_b(z)?;
    cov.scale(S::one() / S::cast((z.rows() - 1) as f64));
    Ok(cov)
}

/// Alignment loss `-Tr(Z1ᵀZ2)/n` with gradients `(-Z2/n, -Z1/n)`.
pub fn alignment_loss<S: Scalar>(
    z1: &DenseMatrix<S>,
    z2: &DenseMatrix<S>,
) -> Result<(S, DenseMatrix<S>, DenseMatrix<S>)> {
    if z1.rows() != z2.rows() || z1.cols() != z2.cols() {
        return Err(Error::DimensionMismatch(format!(
            "alignment: {}x{} vs {}x{}",
            z1.rows(),
            z1.cols(),
            z2.rows(),
            z2.cols()
        )));
    }
    let n = S::cast(z1.rows() as f64);
    let trace = z1
        .data()
        .iter()
        .zip(z2.data())
        .fold(S::zero(), |acc, (&a, &b)| acc + a * b);
    let value = -trace / n;
    let scale = -S::one() / n;
    let mut g1 = z2.clone();
    g1.scale(scale);
    let mut g2 = z1.clone();
    g2.scale(scale);
    Ok((value, g1, g2))
}

/// One view's uniformity evaluation: value, gradient, and the covariance
/// spectrum for diagnostics.
#[derive(Debug, Clone)]
pub struct UniformityEval<S> {
    pub value: S,
    pub grad: DenseMatrix<S>,
    pub eigenvalues: Vec<S>,
    pub offdiag_mean_abs: S,
}

fn offdiag_mean_abs<S: Scalar>(cov: &DenseMatrix<S>) -> S {
    let d = cov.rows();
    if d < 2 {
        return S::zero();
    }
    let mut sum = S::zero();
    for i in 0..d {
        for j in 0..d {
            if i != j {
                sum += cov.get(i, j).abs();
            }
        }
    }
    sum / S::cast((d * (d - 1)) as f64)
}

fn uniformity_value<S: Scalar>(cov: &DenseMatrix<S>, eig: &SymEig<S>) -> S {
    let d = S::cast(cov.rows() as f64);
    let half: Vec<S> = eig.eigenvalues.iter().map(|&l| l.max(S::zero()).sqrt()).collect();
    let sqrt_cov = spectral_rebuild(eig, &half);
    cov.trace() + d - S::cast(2.0) * sqrt_cov.trace()
}

fn uniformity_inner<S: Scalar>(z: &DenseMatrix<S>, clamp: f64, with_grad: bool) -> Result<UniformityEval<S>> {
    if !(clamp >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative clamp {clamp}")));
    }
    let cov = covariance(z)?;
    let eig = eig_sym(&cov)?;
    let value = uniformity_value(&cov, &eig);
    let offdiag = offdiag_mean_abs(&cov);
    let grad = if with_grad {
        let cl = S::cast(clamp);
        let inv_half: Vec<S> = eig
            .eigenvalues
            .iter()
            .map(|&l| S::one() / l.max(cl).sqrt())
            .collect();
        let inv_sqrt = spectral_rebuild(&eig, &inv_half);
        // (2Z - 2 Z Sigma^{-1/2}) / (n-1)
        let mut zs = z.matmul(&inv_sqrt)?;
        zs.scale(-S::one());
        zs.add_scaled(z, S::one())?;
        zs.scale(S::cast(2.0) / S::cast((z.rows() - 1) as f64));
        zs
    } else {
        DenseMatrix::zeros(0, 0)
    };
    Ok(UniformityEval { value, grad, eigenvalues: eig.eigenvalues, offdiag_mean_abs: offdiag })
}

/// Distance of one view's representation distribution from the standard
/// Gaussian: value and gradient.
pub fn uniformity_term<S: Scalar>(z: &DenseMatrix<S>, clamp: f64) -> Result<(S, DenseMatrix<S>)> {
    let eval = uniformity_inner(z, clamp, true)?;
    Ok((eval.value, eval.grad))
}

/// Value-only evaluation with the covariance spectrum (diagnostics).
pub fn uniformity_eval<S: Scalar>(z: &DenseMatrix<S>, clamp: f64, with_grad: bool) -> Result<UniformityEval<S>> {
    uniformity_inner(z, clamp, with_grad)
}

/// Full loss evaluation over a pair of views.
#[derive(Debug, Clone)]
pub struct TotalLoss<S> {
    pub breakdown: LossBreakdown<S>,
    pub grad_z1: DenseMatrix<S>,
    pub grad_z2: DenseMatrix<S>,
}

/// `L = align_weight * L_ali + lambda * (U(Z1) + U(Z2)) / 2`, with the
/// gradient composed per entry by the same linear combination. The
/// breakdown also carries the first view's covariance diagnostics.
pub fn total_loss_weighted<S: Scalar>(
    z1: &DenseMatrix<S>,
    z2: &DenseMatrix<S>,
    align_weight: f64,
    lambda: f64,
    clamp: f64,
) -> Result<TotalLoss<S>> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
    }
    if !align_weight.is_finite() {
        return Err(Error::NonFinite("alignment weight".into()));
    }
    let (align, ga1, ga2) = alignment_loss(z1, z2)?;
    let need_uni_grad = lambda > 0.0;
    let u1 = uniformity_inner(z1, clamp, need_uni_grad)?;
    let u2 = uniformity_inner(z2, clamp, need_uni_grad)?;

    let w = S::cast(align_weight);
    let lam = S::cast(lambda);
    let half = S::cast(0.5);
    let uniform = half * (u1.value + u2.value);
    let total = w * align + lam * uniform;

    let compose = |ga: &DenseMatrix<S>, gu: &DenseMatrix<S>| -> Result<DenseMatrix<S>> {
        let mut g = ga.clone();
        g.scale(w);
        if need_uni_grad {
            g.add_scaled(gu, lam * half)?;
        }
        Ok(g)
    };
    let grad_z1 = compose(&ga1, &u1.grad)?;
    let grad_z2 = compose(&ga2, &u2.grad)?;

    let breakdown = LossBreakdown {
        align,
        uniform,
        total,
        lambda: lam,
        align_weight: w,
        min_eigenvalue: u1.eigenvalues.first().copied().unwrap_or_else(S::zero),
        offdiag_mean_abs: u1.offdiag_mean_abs,
    };
    Ok(TotalLoss { breakdown, grad_z1, grad_z2 })
}

/// The paper's training loss: alignment plus `lambda`-weighted uniformity.
pub fn total_loss<S: Scalar>(
    z1: &DenseMatrix<S>,
    z2: &DenseMatrix<S>,
    lambda: f64,
    clamp: f64,
) -> Result<TotalLoss<S>> {
    total_loss_weighted(z1, z2, 1.0, lambda, clamp)
}

/// Squared 2-Wasserstein distance between Gaussians:
/// `|mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S2^{1/2} S1 S2^{1/2})^{1/2})`.
pub fn wasserstein2_gaussian<S: Scalar>(a: &GaussianMoments<S>, b: &GaussianMoments<S>) -> Result<S> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::DimensionMismatch(format!(
            "moments of dimension {} vs {}",
            a.mean.len(),
            b.mean.len()
        )));
    }
    let mean_sq = a
        .mean
        .iter()
        .zip(&b.mean)
        .fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));

    let eig_b = eig_sym(&b.covariance)?;
    let half_vals: Vec<S> = eig_b.eigenvalues.iter().map(|&l| l.max(S::zero()).sqrt()).collect();
    let b_half = spectral_rebuild(&eig_b, &half_vals);
    let inner = b_half.matmul(&a.covariance)?.matmul(&b_half)?;
    // Symmetrize roundoff before the second square root.
    let mut inner_sym = inner.clone();
    for i in 0..inner.rows() {
        for j in 0..inner.cols() {
            let m = (inner.get(i, j) + inner.get(j, i)) / S::cast(2.0);
            inner_sym.set(i, j, m);
        }
    }
    let eig_inner = eig_sym(&inner_sym)?;
    let cross: S = eig_inner.eigenvalues.iter().map(|&l| l.max(S::zero()).sqrt()).sum();

    let value = mean_sq + a.covariance.trace() + b.covariance.trace() - S::cast(2.0) * cross;
    Ok(value.max(S::zero()))
}

/// Average pairwise Gaussian potential, `log mean_{i<j} exp(-t |zi - zj|^2)`.
/// Diagnostic only; rows are expected to be L2-normalized by the caller.
pub fn wang_isola_uniformity<S: Scalar>(z: &DenseMatrix<S>, t: f64) -> Result<S> {
    if z.rows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "uniformity metric needs at least 2 rows, got {}",
            z.rows()
        )));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {t}")));
    }
    let tt = S::cast(t);
    let mut sum = S::zero();
    for i in 1..z.rows() {
        let zi = z.row(i);
        for j in 0..i {
            let zj = z.row(j);
            let dist_sq = zi
                .iter()
                .zip(zj)
                .fold(S::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
            sum += (-tt * dist_sq).exp();
        }
    }
    let pairs = S::cast((z.rows() * (z.rows() - 1) / 2) as f64);
    Ok((sum / pairs).ln())
}

/// Rows of i.i.d. standard Gaussians projected onto the unit sphere.
/// The measure-zero zero vector is re-drawn.
pub fn gaussian_sphere_sample<S: Scalar>(
    stream: &mut RngStream,
    count: usize,
    dim: usize,
) -> Result<DenseMatrix<S>> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("sphere sampling needs dim >= 2, got {dim}")));
    }
    let mut m = DenseMatrix::zeros(count, dim);
    for i in 0..count {
        loop {
            let row = m.row_mut(i);
            for v in row.iter_mut() {
                *v = S::cast(stream.next_gaussian());
            }
            let norm = row.iter().fold(S::zero(), |acc, &v| acc + v * v).sqrt();
            if norm > S::zero() {
                for v in row.iter_mut() {
                    *v /= norm;
                }
                break;
            }
        }
    }
    Ok(m)
}

/// Histogram of row angles in the plane of the first two columns, over
/// `[-pi, pi)`. Backs the CSV angle-distribution export.
pub fn angle_histogram<S: Scalar>(z: &DenseMatrix<S>, bins: usize) -> Result<Vec<usize>> {
    if z.cols() < 2 {
        return Err(Error::DimensionMismatch("angle histogram needs at least 2 columns".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be positive".into()));
    }
    let mut hist = vec![0usize; bins];
    for i in 0..z.rows() {
        let theta = z.get(i, 1).to_f64_lossy().atan2(z.get(i, 0).to_f64_lossy());
        let unit = (theta + std::f64::consts::PI) / std::f64::consts::TAU;
        let b = ((unit * bins as f64) as usize).min(bins - 1);
        hist[b] += 1;
    }
    Ok(hist)
}
