//! Stochastic graph views: feature masking and edge dropping.
//!
//! A view is produced per epoch from fresh streams. One Bernoulli mask
//! vector is shared by all nodes (whole feature dimensions are zeroed),
//! and one keep-draw covers both directions of an undirected edge, so
//! augmented graphs stay symmetric.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::{CsrGraph, EdgeList};
use crate::rng::{bernoulli_mask, RngStream};
use crate::scalar::Scalar;

/// Augmentation intensities: `p_m` masks feature dimensions, `p_d` drops
/// edges.
#[derive(Debug, Clone, Copy)]
pub struct AugmentConfig {
    pub p_m: f64,
    pub p_d: f64,
}

impl AugmentConfig {
    pub fn new(p_m: f64, p_d: f64) -> Result<Self> {
        for p in [p_m, p_d] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange(p));
            }
        }
        Ok(Self { p_m, p_d })
    }
}

/// Zeroes a random subset of feature dimensions: one mask of length
/// `x.cols()` drawn with keep probability `1 - p_m`, applied to every row.
pub fn feature_mask<S: Scalar>(
    x: &DenseMatrix<S>,
    p_m: f64,
    stream: &mut RngStream,
) -> Result<DenseMatrix<S>> {
    let mask = bernoulli_mask(stream, x.cols(), 1.0 - p_m)
        .map_err(|_| Error::ProbabilityOutOfRange(p_m))?;
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for (v, &keep) in row.iter_mut().zip(&mask) {
            if keep == 0 {
                *v = S::zero();
            }
        }
    }
    Ok(out)
}

/// Drops each undirected edge with probability `p_d`; one draw decides
/// both stored directions. The input must be a raw graph (no self-loops).
pub fn edge_drop<S: Scalar>(
    g: &CsrGraph<S>,
    p_d: f64,
    stream: &mut RngStream,
) -> Result<CsrGraph<S>> {
    if g.has_self_loop() {
        return Err(Error::InvalidArgument(
            "edge_drop expects a raw graph without self-loops".into(),
        ));
    }
    let pairs = g.undirected_edges();
    let keep = bernoulli_mask(stream, pairs.len(), 1.0 - p_d)
        .map_err(|_| Error::ProbabilityOutOfRange(p_d))?;
    let kept: Vec<(usize, usize)> = pairs
        .into_iter()
        .zip(&keep)
        .filter_map(|(e, &k)| (k == 1).then_some(e))
        .collect();
    CsrGraph::from_edges(&EdgeList::new(kept), g.num_nodes())
}
