use thiserror::Error;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("signal dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("covariance matrix is not usable: 1^T V^-1 1 = {0}")]
    CovarianceCorrupted(f64),

    #[error("singular covariance with non-nested structure")]
    NonNestedSingular,

    #[error("damping matrix has a zero diagonal entry at column {0}")]
    RankDeficientDamping(usize),

    #[error("degenerate filter: divergence factor xi_A = {0}")]
    DegenerateFilter(f64),

    #[error("denoiser degenerate: divergence factor xi_B = {0}")]
    DegenerateDenoiser(f64),

    #[error("non-finite value in {stage}")]
    NonFinite { stage: &'static str },

    #[error("state evolution sequence is not monotone at iteration {iteration}")]
    NotMonotone { iteration: usize },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }

    /// Attaches the iteration index at which the error surfaced.
    pub fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: alloc::boxed::Box::new(e),
            },
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
