//! Central finite-difference gradient checking.
//!
//! The checker is independent of any analytic gradient path: it only needs
//! a loss closure over a parameter list and re-evaluates it at perturbed
//! points. Used by the test suites to validate every backward pass.

use crate::dense::DenseMatrix;
use crate::scalar::Scalar;

/// Central finite-difference gradients of `loss` with respect to every
/// entry of every parameter matrix, at step `h`.
pub fn finite_difference<S, F>(loss: &mut F, params: &[DenseMatrix<S>], h: f64) -> Vec<DenseMatrix<S>>
where
    S: Scalar,
    F: FnMut(&[DenseMatrix<S>]) -> S,
{
    let step = S::cast(h);
    let two = S::cast(2.0);
    let mut work: Vec<DenseMatrix<S>> = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let mut g = DenseMatrix::zeros(params[p].rows(), params[p].cols());
        for idx in 0..params[p].rows() * params[p].cols() {
            let orig = work[p].data()[idx];
            work[p].data_mut()[idx] = orig + step;
            let up = loss(&work);
            work[p].data_mut()[idx] = orig - step;
            let down = loss(&work);
            work[p].data_mut()[idx] = orig;
            g.data_mut()[idx] = (up - down) / (two * step);
        }
        grads.push(g);
    }
    grads
}

/// Max over all entries of `|a - b| / max(|a|, |b|, floor)`.
pub fn max_rel_error<S: Scalar>(a: &[DenseMatrix<S>], b: &[DenseMatrix<S>], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut worst = 0.0f64;
    for (ma, mb) in a.iter().zip(b) {
        assert_eq!((ma.rows(), ma.cols()), (mb.rows(), mb.cols()));
        for (&x, &y) in ma.data().iter().zip(mb.data()) {
            let x = x.to_f64_lossy();
            let y = y.to_f64_lossy();
            let denom = x.abs().max(y.abs()).max(floor);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        // f(w) = sum w^2 has gradient 2w.
        let w = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let mut f = |ps: &[DenseMatrix<f64>]| ps[0].data().iter().map(|v| v * v).sum::<f64>();
        let fd = finite_difference(&mut f, std::slice::from_ref(&w), 1e-5);
        let mut expect = w.clone();
        expect.scale(2.0);
        assert!(max_rel_error(&fd, &[expect], 1e-3) < 1e-8);
    }
}
