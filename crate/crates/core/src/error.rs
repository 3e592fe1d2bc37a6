use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model reference: {0}")]
    ModelReference(String),

    #[error("incomparable domains: {0}")]
    ComparisonDomain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("model failed validation:\n{0}")]
    Invalid(ValidationReport),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
