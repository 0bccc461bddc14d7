use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point outside domain: {0}")]
    OutOfDomain(String),

    #[error("integer constraint violated: {0}")]
    IntegerConstraint(String),

    /// Suggest/observe called out of order or with the wrong point.
    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("duplicate key: {0}")]
    DuplicateKey(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
