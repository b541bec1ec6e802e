use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrfError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PrfError>;

pub(crate) fn invalid(msg: impl Into<String>) -> PrfError {
    PrfError::InvalidParameter(msg.into())
}
