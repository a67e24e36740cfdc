//! Adam with classic L2 weight decay (decay added to the gradient).

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Optimizer hyperparameters. Only the learning rate and weight decay are
/// exposed by the training configuration; the moment decays and epsilon
/// stay at their usual defaults.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamParams {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self { lr, weight_decay, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment accumulators, one pair per parameter matrix.
#[derive(Debug, Clone)]
pub struct AdamState<S> {
    m: Vec<DenseMatrix<S>>,
    v: Vec<DenseMatrix<S>>,
    step: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &[DenseMatrix<S>]) -> Self {
        let m = params.iter().map(|p| DenseMatrix::zeros(p.rows(), p.cols())).collect();
        let v = params.iter().map(|p| DenseMatrix::zeros(p.rows(), p.cols())).collect();
        Self { m, v, step: 0 }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn second_moments(&self) -> &[DenseMatrix<S>] {
        &self.v
    }
}

/// One bias-corrected Adam update over all parameters:
/// `g <- grad + wd * param`, then the standard moment updates and
/// `param -= lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step<S: Scalar>(
    params: &mut [DenseMatrix<S>],
    grads: &[DenseMatrix<S>],
    state: &mut AdamState<S>,
    opts: &AdamParams,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch(format!(
            "adam_step: {} params, {} grads, {} states",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.step += 1;
    let b1 = S::cast(opts.beta1);
    let b2 = S::cast(opts.beta2);
    let one = S::one();
    let lr = S::cast(opts.lr);
    let wd = S::cast(opts.weight_decay);
    let eps = S::cast(opts.epsilon);
    let bc1 = one - S::cast(opts.beta1.powi(state.step as i32));
    let bc2 = one - S::cast(opts.beta2.powi(state.step as i32));

    for (idx, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        if p.rows() != g.rows() || p.cols() != g.cols() {
            return Err(Error::DimensionMismatch(format!(
                "adam_step: param {idx} is {}x{}, grad is {}x{}",
                p.rows(),
                p.cols(),
                g.rows(),
                g.cols()
            )));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("gradient of parameter {idx}")));
        }
        let m = state.m[idx].data_mut();
        let v = state.v[idx].data_mut();
        for ((pv, &gv), (mv, vv)) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut().zip(v.iter_mut())) {
            let grad = gv + wd * *pv;
            *mv = b1 * *mv + (one - b1) * grad;
            *vv = b2 * *vv + (one - b2) * grad * grad;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            *pv = *pv - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_fill, RngStream};

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut params = vec![DenseMatrix::from_rows(&[vec![1.0, -2.0]]).unwrap()];
        let grads = vec![DenseMatrix::zeros(1, 2)];
        let mut state = AdamState::new(&params);
        let before = params[0].clone();
        adam_step(&mut params, &grads, &mut state, &AdamParams::new(1e-2, 0.0)).unwrap();
        assert_eq!(params[0].data(), before.data());
    }

    #[test]
    fn first_step_is_signed_learning_rate() {
        // Bias correction makes step one equal -lr * g / (|g| + eps).
        for &g in &[0.37f64, -12.0, 4e-6] {
            let mut params = vec![DenseMatrix::from_rows(&[vec![0.0]]).unwrap()];
            let grads = vec![DenseMatrix::from_rows(&[vec![g]]).unwrap()];
            let mut state = AdamState::new(&params);
            let lr = 1e-3;
            adam_step(&mut params, &grads, &mut state, &AdamParams::new(lr, 0.0)).unwrap();
            let expect = -lr * g / (g.abs() + 1e-8);
            assert!((params[0].get(0, 0) - expect).abs() < 1e-15);
            assert!((params[0].get(0, 0) + lr * g.signum()).abs() < 1e-5);
        }
    }

    #[test]
    fn deterministic_given_identical_inputs() {
        let mut s = RngStream::derive(1, "adam", 0);
        let p0: DenseMatrix<f64> = gaussian_fill(&mut s, 3, 3, 1.0).unwrap();
        let g: DenseMatrix<f64> = gaussian_fill(&mut s, 3, 3, 1.0).unwrap();
        let run = || {
            let mut params = vec![p0.clone()];
            let mut state = AdamState::new(&params);
            for _ in 0..10 {
                adam_step(&mut params, &[g.clone()], &mut state, &AdamParams::new(1e-2, 1e-4)).unwrap();
            }
            params.remove(0)
        };
        assert_eq!(run().data(), run().data());
    }

    #[test]
    fn second_moments_stay_nonnegative() {
        let mut s = RngStream::derive(2, "adam", 0);
        let mut params = vec![gaussian_fill::<f64>(&mut s, 4, 4, 1.0).unwrap()];
        let mut state = AdamState::new(&params);
        for k in 0..50 {
            let g: DenseMatrix<f64> = gaussian_fill(&mut s, 4, 4, 1.0 + k as f64 * 0.1).unwrap();
            adam_step(&mut params, &[g], &mut state, &AdamParams::new(1e-2, 1e-5)).unwrap();
            assert!(state.second_moments()[0].data().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn constant_gradient_moves_against_its_sign() {
        let mut params = vec![DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap()];
        let g = DenseMatrix::from_rows(&[vec![0.5, -0.25]]).unwrap();
        let mut state = AdamState::new(&params);
        let lr = 1e-3;
        adam_step(&mut params, &[g.clone()], &mut state, &AdamParams::new(lr, 0.0)).unwrap();
        let mut prev = params[0].clone();
        for step in 0..20 {
            adam_step(&mut params, &[g.clone()], &mut state, &AdamParams::new(lr, 0.0)).unwrap();
            let dx0 = params[0].get(0, 0) - prev.get(0, 0);
            let dx1 = params[0].get(0, 1) - prev.get(0, 1);
            assert!(dx0 < 0.0 && (dx0 / lr + 1.0).abs() < 1e-3, "step {step}: {dx0}");
            assert!(dx1 > 0.0 && (dx1 / lr - 1.0).abs() < 1e-3);
            prev = params[0].clone();
        }
    }

    #[test]
    fn converges_on_quadratic() {
        // Minimize |w|^2 from a random start: 500 steps at lr 1e-2.
        let mut s = RngStream::derive(77, "adam-smoke", 0);
        let mut params = vec![gaussian_fill::<f64>(&mut s, 1, 8, 0.5).unwrap()];
        let mut state = AdamState::new(&params);
        let opts = AdamParams::new(1e-2, 0.0);
        for _ in 0..500 {
            let mut g = params[0].clone();
            g.scale(2.0);
            adam_step(&mut params, &[g], &mut state, &opts).unwrap();
        }
        let norm = params[0].frobenius_norm();
        assert!(norm < 1e-3, "|w| after 500 steps: {norm}");
    }

    #[test]
    fn rejects_non_finite_gradient_and_shape_mismatch() {
        let mut params = vec![DenseMatrix::from_rows(&[vec![1.0]]).unwrap()];
        let mut state = AdamState::new(&params);
        let bad = vec![DenseMatrix::from_rows(&[vec![f64::NAN]]).unwrap()];
        assert!(adam_step(&mut params, &bad, &mut state, &AdamParams::new(1e-2, 0.0)).is_err());
        let wrong = vec![DenseMatrix::<f64>::zeros(2, 2)];
        assert!(adam_step(&mut params, &wrong, &mut state, &AdamParams::new(1e-2, 0.0)).is_err());
    }
}
