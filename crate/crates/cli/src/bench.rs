//! Scaling benchmark for the loss-plus-gradient path on synthetic
//! batch-normalized matrices. The alignment term and the covariance work
//! are linear in the row count; the eigendecomposition is cubic in the
//! embedding dimension but independent of rows. Peak allocation is
//! tracked so a quadratic-in-n buffer can never slip in unnoticed
//! (requires the tracking allocator to be installed in the binary).

use std::time::Instant;

use ssge_core::alloc_track;
use ssge_core::encoder::batch_norm;
use ssge_core::eig::eig_sym;
use ssge_core::objective::{covariance, total_loss};
use ssge_core::rng::{gaussian_fill, RngStream};
use ssge_core::RealMatrix;

use crate::Result;

/// One measurement: total loss+gradient wall time, the eigendecomposition
/// share, and peak live allocation during the measured region.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n: usize,
    pub d: usize,
    pub loss_grad_secs: f64,
    pub eig_secs: f64,
    pub peak_bytes: usize,
}

fn synthetic_views(n: usize, d: usize, seed: u64) -> Result<(RealMatrix, RealMatrix)> {
    let mut s1 = RngStream::derive(seed, "bench-view1", (n * 31 + d) as u64);
    let mut s2 = RngStream::derive(seed, "bench-view2", (n * 31 + d) as u64);
    let z1 = batch_norm(&gaussian_fill(&mut s1, n, d, 1.0)?).0;
    let z2 = batch_norm(&gaussian_fill(&mut s2, n, d, 1.0)?).0;
    Ok((z1, z2))
}

/// Times loss+gradient at every `(n, d)` pair.
pub fn run_bench(ns: &[usize], ds: &[usize], seed: u64) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(ns.len() * ds.len());
    for &d in ds {
        for &n in ns {
            let (z1, z2) = synthetic_views(n, d, seed)?;

            alloc_track::reset_peak();
            let t0 = Instant::now();
            let tl = total_loss(&z1, &z2, 1.0, 1e-8)?;
            let loss_grad_secs = t0.elapsed().as_secs_f64();
            let peak_bytes = alloc_track::peak_bytes();
            std::hint::black_box(&tl.grad_z1);
            std::hint::black_box(&tl.grad_z2);

            let cov = covariance(&z1)?;
            let t1 = Instant::now();
            let eig = eig_sym(&cov)?;
            let eig_secs = t1.elapsed().as_secs_f64();
            std::hint::black_box(&eig.eigenvalues);

            rows.push(BenchRow { n, d, loss_grad_secs, eig_secs, peak_bytes });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_rows_cover_the_grid() {
        let rows = run_bench(&[64, 128], &[8, 16], 1).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.loss_grad_secs >= 0.0 && r.eig_secs >= 0.0));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, (i as f64).powi(3) * 2.0)).collect();
        assert!((log_log_slope(&pts) - 3.0).abs() < 1e-12);
    }
}
