use thiserror::Error;

/// Errors raised by library operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Referential or structural problem in an input; ids are listed.
    #[error("structural error: {message} ({})", ids.join(", "))]
    Structural { message: String, ids: Vec<String> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph mismatch: {0}")]
    Mismatch(String),

    #[error("discontinuous route for edge {edge}: {detail}")]
    Discontinuous { edge: String, detail: String },

    #[error("resource guard: {cells} cells exceeds limit {limit}")]
    ResourceLimit { cells: u128, limit: u128 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn structural(message: impl Into<String>, ids: impl IntoIterator<Item = String>) -> Self {
        Error::Structural { message: message.into(), ids: ids.into_iter().collect() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub fn mismatch(message: impl Into<String>) -> Self {
        Error::Mismatch(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
