use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Adaptive refinement gave up; `partial` is the best available estimate.
    #[error("numeric failure: {message} (partial estimate {partial})")]
    NumericFailure { message: String, partial: f64 },

    #[error("rank-deficient Jacobian: {rank} of {free} free parameters resolvable")]
    RankDeficient { rank: usize, free: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("truncation cap exceeded: {0}")]
    Truncation(String),

    #[error("step size too large: event probability {probability:.4} >= 0.01 ({event}); reduce dt")]
    StepSize { event: &'static str, probability: f64 },

    /// At or above the lasing threshold, where the spontaneous-emission model breaks down.
    #[error("outside the spontaneous-emission regime: {0}")]
    Regime(String),

    #[error("symmetry violated: {0}")]
    Symmetry(String),

    #[error("no correlation peak found: {0}")]
    PeakNotFound(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
