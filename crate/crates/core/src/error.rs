use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QocError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("closed-form terminal costate is implemented for dimension 2 only (got {0})")]
    UnsupportedDimension(usize),

    #[error("ill-conditioned gradient: minimum eigenvalue {min_eigenvalue:e} must exceed 10 x step {step:e}")]
    IllConditionedGradient { min_eigenvalue: f64, step: f64 },

    #[error("Hermitian eigensolver failed to converge")]
    EigenSolver,

    #[error("internal consistency violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, QocError>;

pub(crate) fn invalid(msg: impl Into<String>) -> QocError {
    QocError::InvalidArgument(msg.into())
}
