//! Self-supervised graph embedding in pure Rust.
//!
//! The crate trains a sparse GCN encoder on two stochastically augmented
//! views of a graph, pulling the views' node representations together
//! while pushing the representation covariance toward the identity via a
//! closed-form Gaussian 2-Wasserstein penalty. Everything is written
//! against an abstract [`Scalar`] (`f32` or `f64`); the end-to-end
//! pipeline and all file formats use [`Real`] (= `f64`).
//!
//! Module map:
//! - [`graph`]: CSR graphs, symmetric normalization, sparse-dense products
//! - [`dense`]: row-major dense matrices and the kernels used everywhere
//! - [`eig`]: cyclic Jacobi symmetric eigendecomposition and spectral powers
//! - [`rng`]: deterministic seeded streams, Bernoulli masks, Gaussian fills
//! - [`augment`]: feature masking and edge dropping
//! - [`encoder`]: GCN forward pass, batch norm, analytic backprop
//! - [`objective`]: alignment + uniformity losses with closed-form gradients
//! - [`optim`]: Adam with L2 weight decay
//! - [`eval`]: linear probe, k-means, NMI/ARI
//!
//! All operations are deterministic: identical seeds and inputs produce
//! bit-identical outputs, and reduction orders are fixed and documented.

pub mod alloc_track;
pub mod augment;
pub mod dense;
pub mod eig;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod graph;
pub mod objective;
pub mod optim;
pub mod rng;
pub mod scalar;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use graph::{CsrGraph, EdgeList};
pub use rng::RngStream;
pub use scalar::Scalar;

/// Scalar type used by the shipped pipeline and every on-disk format.
pub type Real = f64;
/// Dense matrix in pipeline precision.
pub type RealMatrix = DenseMatrix<Real>;
/// Sparse graph in pipeline precision.
pub type RealGraph = CsrGraph<Real>;
/// GCN model in pipeline precision.
pub type RealModel = encoder::GcnModel<Real>;
