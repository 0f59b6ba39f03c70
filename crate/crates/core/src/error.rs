use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {expected} vs {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("covariance is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("operation requires centered Gaussians (nonzero mean rejected)")]
    NonCentered,

    #[error("{0} requires a pure quadratic model (perturbation present)")]
    PerturbedModel(&'static str),

    #[error("tilt precision q*S1^-1 + (1-q)*S2^-1 lost positive definiteness")]
    DivergentTilt,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need more samples than dimensions: {samples} samples, dimension {dim}")]
    TooFewSamples { samples: usize, dim: usize },

    #[error("chain {chain} diverged at step {step}: non-finite energy (reduce step_size)")]
    ChainDiverged { chain: usize, step: usize },

    #[error(
        "chain {chain} acceptance rate {rate:.4} < 0.05 after adaptation at step size \
         {step_size:.3e}; lower step_size or enable adaptation"
    )]
    LowAcceptance {
        chain: usize,
        rate: f64,
        step_size: f64,
    },

    #[error("fixed-point iteration did not converge within {max_iter} iterations (residual {residual:.3e})")]
    NoConvergence { max_iter: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
