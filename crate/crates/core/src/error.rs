use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input `{field}`: {constraint}")]
    InvalidInput { field: String, constraint: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}
