use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension {delta}: {reason}")]
    UnsupportedDimension { delta: usize, reason: &'static str },

    #[error("unsupported precision: {bits} bits (software rounding supports 2..=53)")]
    UnsupportedPrecision { bits: u32 },

    #[error("invalid evaluation scheme: {0}")]
    InvalidScheme(String),

    #[error("input error {eps} too large for a first-order analysis: {detail}")]
    InputErrorTooLarge { eps: String, detail: String },

    #[error("expected {expected} points, got {got}")]
    PointCount { expected: usize, got: usize },

    #[error("value {0} is not representable with the requested precision")]
    NotRepresentable(String),

    #[error("empty instance stream")]
    EmptyStream,

    #[error("empty row list")]
    EmptyRows,

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }
}
