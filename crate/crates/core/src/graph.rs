//! Sparse undirected graphs in compressed-row form.
//!
//! Graphs are immutable after construction and always canonical: row
//! offsets are non-decreasing, column indices strictly increase within a
//! row, and every stored entry has its mirrored twin (undirected
//! contract). Self-loops are introduced only by [`CsrGraph::sym_normalize`],
//! never by construction, so augmentation can never drop them.

use std::collections::HashSet;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Undirected edge list: each pair `(u, v)` with `u != v` listed once.
#[derive(Debug, Clone, Default)]
pub struct EdgeList {
    pairs: Vec<(usize, usize)>,
}

impl EdgeList {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Sparse symmetric adjacency in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrGraph<S> {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> CsrGraph<S> {
    /// Builds a canonical symmetric CSR graph with unit edge weights.
    /// Rejects out-of-range indices, self-loops, and duplicate undirected
    /// pairs (in either orientation).
    pub fn from_edges(edges: &EdgeList, num_nodes: usize) -> Result<Self> {
        let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(edges.len());
        for &(u, v) in edges.pairs() {
            if u >= num_nodes {
                return Err(Error::IndexOutOfRange { index: u, bound: num_nodes });
            }
            if v >= num_nodes {
                return Err(Error::IndexOutOfRange { index: v, bound: num_nodes });
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
            }
        }

        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in edges.pairs() {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut row_offsets = Vec::with_capacity(num_nodes + 1);
        row_offsets.push(0);
        for d in &degree {
            row_offsets.push(row_offsets.last().unwrap() + d);
        }
        let nnz = *row_offsets.last().unwrap();
        let mut col_indices = vec![0usize; nnz];
        let mut cursor = row_offsets[..num_nodes].to_vec();
        for &(u, v) in edges.pairs() {
            col_indices[cursor[u]] = v;
            cursor[u] += 1;
            col_indices[cursor[v]] = u;
            cursor[v] += 1;
        }
        for r in 0..num_nodes {
            col_indices[row_offsets[r]..row_offsets[r + 1]].sort_unstable();
        }
        Ok(Self { num_nodes, row_offsets, col_indices, values: vec![S::one(); nnz] })
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of stored entries (both directions of every edge).
    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Columns and values of one row, in ascending column order.
    pub fn row(&self, u: usize) -> (&[usize], &[S]) {
        let span = self.row_offsets[u]..self.row_offsets[u + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    pub fn has_self_loop(&self) -> bool {
        (0..self.num_nodes).any(|u| self.row(u).0.binary_search(&u).is_ok())
    }

    /// Exact symmetry of stored values: `value(u,v) == value(v,u)`.
    pub fn is_symmetric(&self) -> bool {
        for u in 0..self.num_nodes {
            let (cols, vals) = self.row(u);
            for (&v, &w) in cols.iter().zip(vals) {
                let (vcols, vvals) = self.row(v);
                match vcols.binary_search(&u) {
                    Ok(pos) if vvals[pos] == w => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Undirected edge pairs `(u, v)` with `u < v`, ascending, self-loops
    /// excluded.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(self.nnz() / 2);
        for u in 0..self.num_nodes {
            let (cols, _) = self.row(u);
            for &v in cols {
                if u < v {
                    pairs.push((u, v));
                }
            }
        }
        pairs
    }

    /// Returns the graph of `A + I` with entries `a(u,v) / sqrt(dh_u dh_v)`
    /// where `dh` is the degree in `A + I`. Every node gains a self-loop,
    /// so no degree is zero. Output values are exactly symmetric because
    /// `dh_u * dh_v` commutes bitwise.
    pub fn sym_normalize(&self) -> Self {
        let n = self.num_nodes;
        let one = S::one();
        let mut degree_hat = vec![S::zero(); n];
        for u in 0..n {
            let (_, vals) = self.row(u);
            degree_hat[u] = vals.iter().fold(one, |acc, &v| acc + v);
        }

        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(self.nnz() + n);
        let mut values = Vec::with_capacity(self.nnz() + n);
        row_offsets.push(0);
        let mut entries: Vec<(usize, S)> = Vec::new();
        for u in 0..n {
            // Row of A + I: the diagonal merges into its sorted position.
            entries.clear();
            let (cols, vals) = self.row(u);
            let mut inserted = false;
            for (&v, &w) in cols.iter().zip(vals) {
                if !inserted && v >= u {
                    entries.push((u, if v == u { w + one } else { one }));
                    inserted = true;
                    if v == u {
                        continue;
                    }
                }
                entries.push((v, w));
            }
            if !inserted {
                entries.push((u, one));
            }
            let du = degree_hat[u];
            for &(v, a) in &entries {
                col_indices.push(v);
                values.push(a / (du * degree_hat[v]).sqrt());
            }
            row_offsets.push(col_indices.len());
        }
        Self { num_nodes: n, row_offsets, col_indices, values }
    }

    /// Sparse-dense product: row `i` of the output accumulates
    /// `value(i,j) * m[j,:]` in ascending column order, one pass.
    pub fn spmm(&self, m: &DenseMatrix<S>) -> Result<DenseMatrix<S>> {
        if m.rows() != self.num_nodes {
            return Err(Error::DimensionMismatch(format!(
                "spmm: graph has {} nodes, matrix has {} rows",
                self.num_nodes,
                m.rows()
            )));
        }
        let cols = m.cols();
        let mut out = DenseMatrix::zeros(self.num_nodes, cols);
        for i in 0..self.num_nodes {
            let (nbrs, vals) = self.row(i);
            let orow = out.row_mut(i);
            for (&j, &w) in nbrs.iter().zip(vals) {
                let mrow = m.row(j);
                for (o, &x) in orow.iter_mut().zip(mrow) {
                    *o += w * x;
                }
            }
        }
        Ok(out)
    }

    /// Dense form of the stored matrix; test and diagnostic use.
    pub fn to_dense(&self) -> DenseMatrix<S> {
        let mut d = DenseMatrix::zeros(self.num_nodes, self.num_nodes);
        for u in 0..self.num_nodes {
            let (cols, vals) = self.row(u);
            for (&v, &w) in cols.iter().zip(vals) {
                d.set(u, v, w);
            }
        }
        d
    }
}
