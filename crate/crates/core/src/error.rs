use thiserror::Error;

/// Errors surfaced by the simulator, extractors, classifier and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("pilot contains a zero entry at subcarrier {0}")]
    ZeroPilot(usize),

    #[error("unsupported subcarrier spacing {0} Hz")]
    UnsupportedSpacing(f64),

    #[error("training diverged at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind used in the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ZeroPilot(_) => "zero_pilot",
            Error::UnsupportedSpacing(_) => "unsupported_spacing",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Parse(_) => "parse",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
