use std::io;
use std::path::PathBuf;

use crate::prov_json::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("duplicate {kind} `{id}`")]
    DuplicateRecord { kind: &'static str, id: String },

    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),

    #[error("illegal state: {0}")]
    IllegalState(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("parse error{}: {message}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    Parse {
        offset: Option<usize>,
        message: String,
    },

    #[error("document failed validation ({} errors)", .0.errors.len())]
    InvalidDocument(ValidationReport),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("export failed: {0}")]
    Export(String),

    #[error("external tool unavailable: {0}")]
    ToolUnavailable(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn illegal_state(msg: impl Into<String>) -> Self {
        Error::IllegalState(msg.into())
    }

    /// Stable numeric code, shared with the C interface.
    pub fn code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::DuplicateRecord { .. } => 2,
            Error::DuplicateParam(_) => 3,
            Error::IllegalState(_) => 4,
            Error::Io { .. } => 5,
            Error::Parse { .. } => 6,
            Error::InvalidDocument(_) => 7,
            Error::NotFound(_) => 8,
            Error::Export(_) => 9,
            Error::ToolUnavailable(_) => 10,
        }
    }
}
