use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("index {index} out of range (max {max})")]
    Range { index: usize, max: usize },

    #[error("EM iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err(expected: impl ToString, got: impl ToString) -> Error {
    Error::Dimension {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
