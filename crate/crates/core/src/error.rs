use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("system too large: {0}")]
    TooLarge(String),

    #[error("moment `{0}` is not registered")]
    Unregistered(String),

    #[error("duplicate basis string `{0}`")]
    DuplicateBasis(String),

    #[error("unsupported bound direction: {0}")]
    UnsupportedDirection(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("constraints are inconsistent: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
