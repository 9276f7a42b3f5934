use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in map {index}: expected d = {expected}, found {found}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("unsupported ambient dimension {0} (this operation needs d = 2)")]
    UnsupportedDimension(usize),

    #[error("enumeration budget exceeded: {requested} words requested, limit is {limit}")]
    BudgetExceeded { requested: u128, limit: u64 },

    #[error("word length cap {cap} reached; delta is too small for this system")]
    DepthCapReached { cap: usize },

    #[error("parse error at line {line}, column {column} (byte offset {offset}): {message}")]
    Parse {
        line: usize,
        column: usize,
        offset: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
