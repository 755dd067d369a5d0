use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite sample at node {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("level {requested} exceeds the admissible maximum {max}")]
    LevelTooHigh { requested: u32, max: u32 },

    #[error("boundary hypothesis violated at node x = {node}: f = {value:e}")]
    BoundaryViolation { node: f64, value: f64 },

    #[error("support hypothesis violated at node x = {node}: f = {value:e}")]
    SupportViolation { node: f64, value: f64 },

    #[error("unknown kind `{0}`")]
    UnknownKind(String),

    #[error("precondition rejected ({citation}): {message}")]
    Precondition { message: String, citation: String },

    #[error("scaler error: {0}")]
    Scaler(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for rejections that come from a theorem precondition rather
    /// than from malformed input.
    pub fn is_precondition(&self) -> bool {
        matches!(self, Error::Precondition { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
