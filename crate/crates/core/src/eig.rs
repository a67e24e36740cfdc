//! Symmetric eigendecomposition via cyclic Jacobi rotations, plus spectral
//! matrix functions built on top of it.
//!
//! Jacobi is slower than tridiagonalization-based solvers for large
//! matrices, but it is simple, unconditionally stable for real symmetric
//! input, and fully deterministic. The matrices decomposed here are
//! covariance matrices whose side is the embedding dimension (hundreds),
//! not the node count, so the O(d^3) cost per sweep is acceptable.
//!
//! Convergence: the sweep loop stops once the off-diagonal Frobenius norm
//! drops below `1e-12` times the input Frobenius norm, with a hard cap of
//! 100 sweeps. Rotations whose pivot is negligible relative to the paired
//! diagonal entries are skipped (the pivot is set to zero), following the
//! classic threshold strategy.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest supported matrix side.
pub const MAX_SIDE: usize = 4096;
const MAX_SWEEPS: usize = 100;
/// Absolute symmetry tolerance on input matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct SymEig<S> {
    pub eigenvalues: Vec<S>,
    pub eigenvectors: DenseMatrix<S>,
}

fn check_symmetric<S: Scalar>(m: &DenseMatrix<S>) -> Result<()> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "eig_sym expects a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if n > MAX_SIDE {
        return Err(Error::SideTooLarge { side: n, max: MAX_SIDE });
    }
    let mut worst = S::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if worst > S::cast(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric(worst.to_f64_lossy()));
    }
    Ok(())
}

fn offdiag_frobenius<S: Scalar>(a: &DenseMatrix<S>) -> S {
    let n = a.rows();
    let mut sum = S::zero();
    for p in 0..n {
        for q in (p + 1)..n {
            let v = a.get(p, q);
            sum += v * v;
        }
    }
    (sum + sum).sqrt()
}

/// Decomposes a symmetric matrix. The input must be symmetric within
/// [`SYMMETRY_TOL`] (absolute); the strictly lower triangle is taken as
/// authoritative when the two halves differ by roundoff.
pub fn eig_sym<S: Scalar>(m: &DenseMatrix<S>) -> Result<SymEig<S>> {
    check_symmetric(m)?;
    let n = m.rows();
    if n == 0 {
        return Ok(SymEig { eigenvalues: vec![], eigenvectors: DenseMatrix::zeros(0, 0) });
    }

    // Work on a symmetrized copy so tiny input asymmetries cannot leak
    // through the rotations.
    let mut a = m.clone();
    for p in 0..n {
        for q in (p + 1)..n {
            let v = a.get(q, p);
            a.set(p, q, v);
        }
    }
    let mut v = DenseMatrix::identity(n);

    let tol = S::cast(1e-12) * a.frobenius_norm();
    let one = S::one();
    let hundred = S::cast(100.0);

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let off = offdiag_frobenius(&a);
        if off <= tol {
            converged = true;
            break;
        }
        // Early sweeps only rotate pivots above a shrinking threshold.
        let tresh = if sweep < 3 {
            S::cast(0.2) * off / S::cast((n * n) as f64)
        } else {
            S::zero()
        };

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let g = hundred * apq.abs();
                // After a few sweeps, pivots that no longer affect the
                // paired diagonal entries are flushed to zero.
                if sweep > 3
                    && a.get(p, p).abs() + g == a.get(p, p).abs()
                    && a.get(q, q).abs() + g == a.get(q, q).abs()
                {
                    a.set(p, q, S::zero());
                    a.set(q, p, S::zero());
                    continue;
                }
                if apq.abs() <= tresh {
                    continue;
                }

                let diff = a.get(q, q) - a.get(p, p);
                let t = if diff.abs() + g == diff.abs() {
                    apq / diff
                } else {
                    let theta = diff / (apq + apq);
                    let t = one / (theta.abs() + (one + theta * theta).sqrt());
                    if theta < S::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = one / (one + t * t).sqrt();
                let s = t * c;
                let tau = s / (one + c);
                let h = t * apq;

                a.set(p, p, a.get(p, p) - h);
                a.set(q, q, a.get(q, q) + h);
                a.set(p, q, S::zero());
                a.set(q, p, S::zero());
                for j in 0..n {
                    if j == p || j == q {
                        continue;
                    }
                    let ajp = a.get(j, p);
                    let ajq = a.get(j, q);
                    let np = ajp - s * (ajq + ajp * tau);
                    let nq = ajq + s * (ajp - ajq * tau);
                    a.set(j, p, np);
                    a.set(p, j, np);
                    a.set(j, q, nq);
                    a.set(q, j, nq);
                }
                for j in 0..n {
                    let vjp = v.get(j, p);
                    let vjq = v.get(j, q);
                    v.set(j, p, vjp - s * (vjq + vjp * tau));
                    v.set(j, q, vjq + s * (vjp - vjq * tau));
                }
            }
        }
    }
    if !converged && offdiag_frobenius(&a) > tol {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }

    // Sort ascending; ties keep their original order, so output is
    // deterministic.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).expect("finite eigenvalues"));
    let eigenvalues: Vec<S> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, dst, v.get(r, src));
        }
    }
    Ok(SymEig { eigenvalues, eigenvectors: vectors })
}

/// Rebuilds `V diag(vals) Vᵀ` from an eigendecomposition. The result is
/// symmetrized exactly.
pub fn spectral_rebuild<S: Scalar>(eig: &SymEig<S>, vals: &[S]) -> DenseMatrix<S> {
    let n = eig.eigenvalues.len();
    debug_assert_eq!(vals.len(), n);
    let mut scaled = eig.eigenvectors.clone();
    for r in 0..n {
        let row = scaled.row_mut(r);
        for (k, x) in row.iter_mut().enumerate() {
            *x *= vals[k];
        }
    }
    let mut out = scaled
        .a_bt(&eig.eigenvectors)
        .expect("shapes from the same decomposition");
    for i in 0..n {
        for j in (i + 1)..n {
            let m = (out.get(i, j) + out.get(j, i)) / S::cast(2.0);
            out.set(i, j, m);
            out.set(j, i, m);
        }
    }
    out
}

/// `V diag(max(lambda, clamp)^exponent) Vᵀ` for a symmetric matrix.
///
/// The clamp bounds eigenvalues away from zero before the power is taken;
/// with a negative exponent a positive clamp keeps the result finite even
/// for rank-deficient input.
pub fn psd_power<S: Scalar>(m: &DenseMatrix<S>, exponent: f64, clamp: f64) -> Result<DenseMatrix<S>> {
    if !(clamp >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative clamp {clamp}")));
    }
    let eig = eig_sym(m)?;
    let cl = S::cast(clamp);
    let ex = S::cast(exponent);
    let vals: Vec<S> = eig.eigenvalues.iter().map(|&l| l.max(cl).powf(ex)).collect();
    Ok(spectral_rebuild(&eig, &vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_fill, RngStream};

    fn reconstruct(eig: &SymEig<f64>) -> DenseMatrix<f64> {
        spectral_rebuild(eig, &eig.eigenvalues)
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = eig_sym(&DenseMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_hand_case() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3 with eigenvectors
        // (1,-1)/sqrt(2) and (1,1)/sqrt(2), up to sign.
        let m = DenseMatrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eig = eig_sym(&m).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-12);
        let s = 1.0 / 2.0f64.sqrt();
        let v0 = (eig.eigenvectors.get(0, 0), eig.eigenvectors.get(1, 0));
        let v1 = (eig.eigenvectors.get(0, 1), eig.eigenvectors.get(1, 1));
        assert!((v0.0.abs() - s).abs() < 1e-12 && (v0.1.abs() - s).abs() < 1e-12);
        assert!((v0.0 * v0.1) < 0.0, "first eigenvector has opposite signs");
        assert!((v1.0 * v1.1) > 0.0, "second eigenvector has equal signs");
    }

    #[test]
    fn random_reconstruction_and_orthogonality() {
        let mut stream = RngStream::derive(17, "eig-test", 0);
        let g: DenseMatrix<f64> = gaussian_fill(&mut stream, 8, 8, 1.0).unwrap();
        let mut m = g.at_b(&g).unwrap();
        m.scale(1.0 / 8.0);
        let eig = eig_sym(&m).unwrap();

        let rec = reconstruct(&eig);
        let err = rec.max_abs_diff(&m);
        let scale = m.frobenius_norm();
        assert!(err / scale < 1e-10, "reconstruction error {err}");

        let vtv = eig.eigenvectors.at_b(&eig.eigenvectors).unwrap();
        assert!(vtv.max_abs_diff(&DenseMatrix::identity(8)) < 1e-10);
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let mut stream = RngStream::derive(23, "eig-trace", 0);
        for round in 0..5 {
            let g: DenseMatrix<f64> = gaussian_fill(&mut stream, 6, 6, 1.0).unwrap();
            let mut m = g.at_b(&g).unwrap();
            m.scale(0.3 + 0.1 * round as f64);
            let eig = eig_sym(&m).unwrap();
            let sum: f64 = eig.eigenvalues.iter().sum();
            let tr = m.trace();
            assert!((sum - tr).abs() <= 1e-9 * tr.abs().max(1.0));
        }
    }

    #[test]
    fn ascending_order_and_determinism() {
        let mut stream = RngStream::derive(5, "eig-order", 0);
        let g: DenseMatrix<f64> = gaussian_fill(&mut stream, 12, 12, 1.0).unwrap();
        let m = g.at_b(&g).unwrap();
        let a = eig_sym(&m).unwrap();
        let b = eig_sym(&m).unwrap();
        assert!(a.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenvectors.data(), b.eigenvectors.data());
    }

    #[test]
    fn rejects_non_symmetric_and_non_square() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, 1.0]]).unwrap();
        assert!(matches!(eig_sym(&m), Err(Error::NotSymmetric(_))));
        let r = DenseMatrix::<f64>::zeros(2, 3);
        assert!(eig_sym(&r).is_err());
    }

    #[test]
    fn psd_power_identity_and_diagonal() {
        let i3 = DenseMatrix::<f64>::identity(3);
        let r = psd_power(&i3, 0.5, 0.0).unwrap();
        assert!(r.max_abs_diff(&i3) < 1e-12);

        let d = DenseMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 9.0]]).unwrap();
        let r = psd_power(&d, 0.5, 0.0).unwrap();
        let expect = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert!(r.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn psd_power_hand_case() {
        // sqrt([[2,1],[1,2]]) = V diag(1, sqrt 3) V^T
        //                     = [[(sqrt3+1)/2, (sqrt3-1)/2], ...], symmetric.
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let r = psd_power(&m, 0.5, 0.0).unwrap();
        let a = (3.0f64.sqrt() + 1.0) / 2.0;
        let b = (3.0f64.sqrt() - 1.0) / 2.0;
        let expect = DenseMatrix::from_rows(&[vec![a, b], vec![b, a]]).unwrap();
        assert!(r.max_abs_diff(&expect) < 1e-12, "expected ~[[1.36603,0.36603],...]");
    }

    #[test]
    fn psd_power_square_root_squares_back() {
        let mut stream = RngStream::derive(31, "psd", 0);
        let g: DenseMatrix<f64> = gaussian_fill(&mut stream, 6, 6, 1.0).unwrap();
        let mut m = g.at_b(&g).unwrap();
        // Shift well away from singular so the square root is benign.
        for i in 0..6 {
            m.set(i, i, m.get(i, i) + 1.0);
        }
        let h = psd_power(&m, 0.5, 0.0).unwrap();
        let back = h.matmul(&h).unwrap();
        let rel = back.max_abs_diff(&m) / m.frobenius_norm();
        assert!(rel < 1e-8, "sqrt(m)^2 relative error {rel}");
    }

    #[test]
    fn psd_power_negative_half_is_finite_on_rank_deficient_input() {
        // Rank-1 PSD matrix: outer product of a single vector.
        let v = DenseMatrix::from_rows(&[vec![1.0, 2.0, -1.0]]).unwrap();
        let m = v.at_b(&v).unwrap();
        let r = psd_power(&m, -0.5, 1e-8).unwrap();
        assert!(r.is_finite());
    }

    #[test]
    fn psd_power_f32() {
        let d = DenseMatrix::<f32>::from_rows(&[vec![4.0, 0.0], vec![0.0, 9.0]]).unwrap();
        let r = psd_power(&d, 0.5, 0.0).unwrap();
        assert!((r.get(0, 0) - 2.0).abs() < 1e-5 && (r.get(1, 1) - 3.0).abs() < 1e-5);
    }
}
