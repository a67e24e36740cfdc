//! Downstream evaluation of frozen embeddings: linear probe for node
//! classification, k-means for clustering, and the NMI/ARI agreement
//! metrics.

use std::collections::HashSet;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::optim::{adam_step, AdamParams, AdamState};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Disjoint node-index sets for train/validation/test.
#[derive(Debug, Clone, Default)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    /// Checks ranges and pairwise disjointness.
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = HashSet::new();
        for (name, set) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in set {
                if i >= num_nodes {
                    return Err(Error::IndexOutOfRange { index: i, bound: num_nodes });
                }
                if !seen.insert(i) {
                    return Err(Error::InvalidArgument(format!(
                        "node {i} appears in more than one split (found again in {name})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Cluster assignment per node, labels in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    num_clusters: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, num_clusters: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_clusters) {
            return Err(Error::IndexOutOfRange { index: bad, bound: num_clusters });
        }
        Ok(Self { labels, num_clusters })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Linear-probe training protocol. The defaults are the protocol used for
/// every reported number: full-batch softmax regression trained by Adam,
/// model selection by validation accuracy.
#[derive(Debug, Clone, Copy)]
pub struct ProbeConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { lr: 1e-2, weight_decay: 1e-4, epochs: 300 }
    }
}

fn accuracy<S: Scalar>(
    z: &DenseMatrix<S>,
    weights: &DenseMatrix<S>,
    bias: &DenseMatrix<S>,
    labels: &[usize],
    idx: &[usize],
) -> Result<f64> {
    let logits = z.select_rows(idx)?.matmul(weights)?;
    let mut correct = 0usize;
    for (r, &i) in idx.iter().enumerate() {
        let row = logits.row(r);
        let mut best = 0usize;
        let mut best_v = row[0] + bias.get(0, 0);
        for (c, &v) in row.iter().enumerate().skip(1) {
            let v = v + bias.get(0, c);
            if v > best_v {
                best_v = v;
                best = c;
            }
        }
        if best == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / idx.len() as f64)
}

/// Trains a multinomial softmax classifier on the frozen embeddings and
/// returns test accuracy at the epoch with the best validation accuracy
/// (earliest epoch wins ties).
pub fn logistic_probe<S: Scalar>(
    z: &DenseMatrix<S>,
    labels: &[usize],
    num_classes: usize,
    split: &SplitSpec,
    cfg: &ProbeConfig,
    stream: &mut RngStream,
) -> Result<f64> {
    if labels.len() != z.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            z.rows()
        )));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite("probe input".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::IndexOutOfRange { index: bad, bound: num_classes });
    }
    split.validate(z.rows())?;
    if split.train.is_empty() || split.val.is_empty() || split.test.is_empty() {
        return Err(Error::InvalidArgument("probe requires non-empty train/val/test splits".into()));
    }

    let d = z.cols();
    let k = num_classes;
    let bound = (6.0 / (d + k) as f64).sqrt();
    let mut weights = DenseMatrix::<S>::zeros(d, k);
    for v in weights.data_mut() {
        *v = S::cast((2.0 * stream.next_f64() - 1.0) * bound);
    }
    let bias = DenseMatrix::<S>::zeros(1, k);

    let z_train = z.select_rows(&split.train)?;
    let n_train = split.train.len();
    let inv_n = S::cast(1.0 / n_train as f64);

    let mut params = vec![weights, bias];
    let mut state = AdamState::new(&params);
    let opts = AdamParams::new(cfg.lr, cfg.weight_decay);

    let mut best_val = f64::NEG_INFINITY;
    let mut best_params = params.clone();
    for _ in 0..cfg.epochs {
        // Softmax cross-entropy over the training rows, full batch.
        let logits = z_train.matmul(&params[0])?;
        let mut grad_logits = DenseMatrix::<S>::zeros(n_train, k);
        for r in 0..n_train {
            let row = logits.row(r);
            let brow = params[1].row(0);
            let mut maxv = row[0] + brow[0];
            for c in 1..k {
                maxv = maxv.max(row[c] + brow[c]);
            }
            let mut denom = S::zero();
            let grow = grad_logits.row_mut(r);
            for c in 0..k {
                let e = (row[c] + brow[c] - maxv).exp();
                grow[c] = e;
                denom += e;
            }
            let y = labels[split.train[r]];
            for (c, g) in grow.iter_mut().enumerate() {
                *g = (*g / denom - if c == y { S::one() } else { S::zero() }) * inv_n;
            }
        }
        let grad_w = z_train.at_b(&grad_logits)?;
        let mut grad_b = DenseMatrix::<S>::zeros(1, k);
        for r in 0..n_train {
            let grow = grad_logits.row(r);
            let brow = grad_b.row_mut(0);
            for c in 0..k {
                brow[c] += grow[c];
            }
        }
        adam_step(&mut params, &[grad_w, grad_b], &mut state, &opts)?;

        // Ties keep the latest epoch, i.e. the most converged weights.
        let val_acc = accuracy(z, &params[0], &params[1], labels, &split.val)?;
        if val_acc >= best_val {
            best_val = val_acc;
            best_params = params.clone();
        }
    }
    accuracy(z, &best_params[0], &best_params[1], labels, &split.test)
}

fn squared_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

/// Lloyd k-means with k-means++ seeding. Runs `restarts` independent
/// seedings from the stream and returns the partition with the lowest
/// inertia. Iteration stops when the largest centroid shift drops below
/// `1e-6` or after 300 rounds. Deterministic per stream.
pub fn kmeans<S: Scalar>(
    z: &DenseMatrix<S>,
    k: usize,
    restarts: usize,
    stream: &mut RngStream,
) -> Result<Partition> {
    let n = z.rows();
    if k == 0 || restarts == 0 {
        return Err(Error::InvalidArgument("k and restarts must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {n} rows")));
    }
    let d = z.cols();
    let shift_tol = S::cast(1e-6);

    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts {
        // k-means++ seeding.
        let mut centroids = DenseMatrix::<S>::zeros(k, d);
        let first = stream.next_below(n as u64) as usize;
        centroids.row_mut(0).copy_from_slice(z.row(first));
        let mut dist_sq: Vec<S> = (0..n).map(|i| squared_distance(z.row(i), centroids.row(0))).collect();
        for c in 1..k {
            let total = dist_sq.iter().fold(S::zero(), |acc, &v| acc + v);
            let pick = if total > S::zero() {
                let r = S::cast(stream.next_f64()) * total;
                let mut cum = S::zero();
                let mut chosen = n - 1;
                for (i, &w) in dist_sq.iter().enumerate() {
                    cum += w;
                    if cum > r {
                        chosen = i;
                        break;
                    }
                }
                chosen
            } else {
                stream.next_below(n as u64) as usize
            };
            centroids.row_mut(c).copy_from_slice(z.row(pick));
            for i in 0..n {
                let dd = squared_distance(z.row(i), centroids.row(c));
                if dd < dist_sq[i] {
                    dist_sq[i] = dd;
                }
            }
        }

        let mut assign = vec![0usize; n];
        let mut point_dist = vec![S::zero(); n];
        let mut prev_inertia = f64::INFINITY;
        for _round in 0..300 {
            // Assignment: nearest centroid, lowest index on ties.
            let mut inertia = 0.0f64;
            for i in 0..n {
                let mut best_c = 0usize;
                let mut best_d = squared_distance(z.row(i), centroids.row(0));
                for c in 1..k {
                    let dd = squared_distance(z.row(i), centroids.row(c));
                    if dd < best_d {
                        best_d = dd;
                        best_c = c;
                    }
                }
                assign[i] = best_c;
                point_dist[i] = best_d;
                inertia += best_d.to_f64_lossy();
            }
            // Lloyd iterations never increase inertia (empty-cluster
            // re-seeding resets the baseline); allow roundoff slack.
            assert!(
                inertia <= prev_inertia * (1.0 + 1e-12) + 1e-12,
                "k-means inertia increased: {prev_inertia} -> {inertia}"
            );
            prev_inertia = inertia;

            // Update step.
            let mut counts = vec![0usize; k];
            let mut sums = DenseMatrix::<S>::zeros(k, d);
            for i in 0..n {
                counts[assign[i]] += 1;
                let srow = sums.row_mut(assign[i]);
                for (s, &v) in srow.iter_mut().zip(z.row(i)) {
                    *s += v;
                }
            }
            let mut max_shift = S::zero();
            for c in 0..k {
                if counts[c] == 0 {
                    // Re-seed an empty cluster at the farthest point; this
                    // breaks Lloyd monotonicity, so reset the baseline.
                    let far = (0..n)
                        .max_by(|&a, &b| point_dist[a].partial_cmp(&point_dist[b]).expect("finite"))
                        .expect("non-empty input");
                    centroids.row_mut(c).copy_from_slice(z.row(far));
                    point_dist[far] = S::zero();
                    max_shift = S::infinity();
                    prev_inertia = f64::INFINITY;
                    continue;
                }
                let inv = S::one() / S::cast(counts[c] as f64);
                let crow = centroids.row_mut(c);
                let srow = sums.row(c);
                let mut shift = S::zero();
                for j in 0..d {
                    let nv = srow[j] * inv;
                    let delta = nv - crow[j];
                    shift += delta * delta;
                    crow[j] = nv;
                }
                max_shift = max_shift.max(shift.sqrt());
            }
            if max_shift < shift_tol {
                break;
            }
        }
        if best.as_ref().is_none_or(|(bi, _)| prev_inertia < *bi) {
            best = Some((prev_inertia, assign));
        }
    }
    let (_, labels) = best.expect("at least one restart");
    Partition::new(labels, k)
}

fn contingency(a: &Partition, b: &Partition) -> Result<Vec<Vec<usize>>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "partitions of length {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut table = vec![vec![0usize; b.num_clusters()]; a.num_clusters()];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        table[x][y] += 1;
    }
    Ok(table)
}

/// Normalized mutual information `2 I(A;B) / (H(A) + H(B))`, in `[0, 1]`.
/// When both partitions have zero entropy they are the same trivial
/// partition and the score is 1.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    let table = contingency(a, b)?;
    let n = a.len() as f64;
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty partitions".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let col_sums: Vec<f64> = (0..b.num_clusters())
        .map(|j| table.iter().map(|r| r[j]).sum::<usize>() as f64)
        .collect();

    let entropy = |sums: &[f64]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| {
                let p = s / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&row_sums);
    let hb = entropy(&col_sums);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }

    let mut mi = 0.0f64;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let nij = c as f64;
                mi += (nij / n) * ((n * nij) / (row_sums[i] * col_sums[j])).ln();
            }
        }
    }
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index via the contingency-table closed form, in
/// `[-1, 1]`. Defined as 1 when the adjustment denominator vanishes
/// (identical trivial partitions).
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    let table = contingency(a, b)?;
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty partitions".into()));
    }
    let n = a.len() as f64;
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let col_sums: Vec<f64> = (0..b.num_clusters())
        .map(|j| table.iter().map(|r| r[j]).sum::<usize>() as f64)
        .collect();

    let index: f64 = table
        .iter()
        .flat_map(|r| r.iter())
        .map(|&c| choose2(c as f64))
        .sum();
    let sum_a: f64 = row_sums.iter().map(|&s| choose2(s)).sum();
    let sum_b: f64 = col_sums.iter().map(|&s| choose2(s)).sum();
    let expected = sum_a * sum_b / choose2(n);
    let max_index = 0.5 * (sum_a + sum_b);
    if max_index == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}
