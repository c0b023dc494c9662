use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping of failures, used to pick process exit codes and FFI status values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Io,
    Domain,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("invalid kernel: {0}")]
    Kernel(String),

    #[error("kernel parse error on line {line}: {msg}")]
    KernelParse { line: usize, msg: String },

    #[error("invalid raster: {0}")]
    Raster(String),

    #[error("malformed {format} data: {msg}")]
    Format { format: &'static str, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("convolution error: {0}")]
    Convolve(String),

    #[error("band {name} has zero variance")]
    ZeroVariance { name: String },

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("scene spec error: {0}")]
    Scene(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Usage(_) => ErrorKind::Usage,
            _ => ErrorKind::Domain,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    pub(crate) fn format(format: &'static str, msg: impl Into<String>) -> Self {
        Error::Format { format, msg: msg.into() }
    }
}
