use thiserror::Error;

/// Errors shared by all core modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("self-loop edge ({0}, {0}) is not allowed")]
    SelfLoop(usize),

    #[error("duplicate undirected edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("matrix is not symmetric: max |a[i][j] - a[j][i]| = {0:e}")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("matrix side {side} exceeds the supported maximum {max}")]
    SideTooLarge { side: usize, max: usize },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
