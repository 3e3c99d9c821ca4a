use std::path::PathBuf;

use thiserror::Error;
use udrl_core::UdrlError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{path}: not a model file (bad magic bytes)")]
    BadMagic { path: PathBuf },
    #[error("{path}: model format version {found} is not supported (this build reads version {supported})")]
    UnsupportedVersion { path: PathBuf, found: u16, supported: u16 },
    #[error("{path}: file is truncated")]
    Truncated { path: PathBuf },
    #[error("{path}: unknown model family tag {tag}")]
    UnknownFamily { path: PathBuf, tag: u8 },
    #[error("{path}: corrupt model payload: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] UdrlError),
}

impl ServiceError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
