use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent grid, problem or solver parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A matrix expected to be positive definite failed to factor.
    #[error("matrix is not positive definite (pivot {pivot} at row {row}): {context}")]
    NotPositiveDefinite {
        row: usize,
        pivot: f64,
        context: String,
    },

    #[error("no convergence after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    #[error("dense solve refused: dimension {n} exceeds limit {limit}")]
    DenseTooLarge { n: usize, limit: usize },

    #[error("least-squares fit is rank deficient: need at least {needed} points, got {got}")]
    RankDeficient { needed: usize, got: usize },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
