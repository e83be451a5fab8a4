use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state {state} is out of range for a policy over {n_states} states")]
    InvalidState { state: usize, n_states: usize },

    #[error("policy family `{family}` does not support {operation}")]
    UnsupportedFamily {
        family: &'static str,
        operation: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no renewal within {max_steps} steps")]
    Truncation { max_steps: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
