use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported version: {0}")]
    UnsupportedVersion(String),

    #[error("payload length mismatch: header implies {expected} bytes, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported size {0}")]
    UnsupportedSize(usize),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("truncated stream")]
    Truncated,

    #[error("corrupt stream: {0}")]
    Corrupt(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::Corrupt(msg.into())
    }

    /// Whether the error comes from malformed or unreadable input data.
    pub fn is_bad_input(&self) -> bool {
        matches!(
            self,
            Error::BadMagic { .. }
                | Error::UnsupportedVersion(_)
                | Error::LengthMismatch { .. }
                | Error::Truncated
                | Error::Corrupt(_)
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}
