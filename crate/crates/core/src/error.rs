use thiserror::Error;

/// Errors raised by model construction and the evaluation routines built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: {detail}")]
    DimensionMismatch { field: &'static str, detail: String },

    #[error("`{field}` out of range: {detail}")]
    OutOfRange { field: &'static str, detail: String },

    #[error("matrix `{0}` is not Hermitian")]
    NotHermitian(&'static str),

    #[error("H(rho) - A is singular at the evaluation point (reciprocal condition {rcond:e})")]
    SingularAtPoint { rcond: f64 },

    #[error("model has no `{0}` matrix")]
    MissingMatrix(&'static str),

    #[error("implicit step matrix is singular at step {step}")]
    SingularStep { step: usize },

    #[error("unsupported model shape: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(field: &'static str, detail: impl Into<String>) -> Error {
    Error::DimensionMismatch {
        field,
        detail: detail.into(),
    }
}

pub(crate) fn out_of_range(field: &'static str, detail: impl Into<String>) -> Error {
    Error::OutOfRange {
        field,
        detail: detail.into(),
    }
}
