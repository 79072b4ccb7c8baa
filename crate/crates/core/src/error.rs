use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation produced a non-finite value.
    #[error("numeric overflow in {context}: {detail}")]
    NumericOverflow { context: String, detail: String },

    /// A dataset carries no variance to decompose.
    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("config error at `{key}`: {detail}")]
    Config { key: String, detail: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A persisted file exists but cannot be decoded.
    #[error("{}: {detail}", path.display())]
    Corrupt { path: PathBuf, detail: String },
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidArgument(msg.into())
    }

    pub fn overflow(context: impl Into<String>, detail: impl Into<String>) -> Self {
        CoreError::NumericOverflow {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn corrupt(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        CoreError::Corrupt {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
