use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient sequence length: {0}")]
    InsufficientLength(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("iteration did not converge within budget: {0}")]
    NonConvergence(String),

    #[error("weighted tail diverges: {0}")]
    DivergentTail(String),

    #[error("tail truncation not certifiable: {0}")]
    TailNotCertified(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("singular matrix: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
