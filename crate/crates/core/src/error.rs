use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("symbol {symbol} is outside the channel support (alphabet size {size})")]
    SymbolOutOfRange { symbol: u32, size: usize },

    #[error("signal kind does not match the channel family")]
    SignalKind,

    #[error("frame out of sequence: expected time {expected}, got {got}")]
    Sequencing { expected: i64, got: i64 },

    #[error("window of radius {window} cannot cover neighborhoods of radius {needed} around the support")]
    Coverage { window: u64, needed: u64 },

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
