use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum UdrlError {
    #[error("invalid action {action}: environment accepts actions 0..{action_count}")]
    InvalidAction { action: usize, action_count: usize },

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("no data: {0}")]
    NoData(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("episode step limit reached: step {step_count} of {max_steps}")]
    StepLimit { step_count: usize, max_steps: usize },

    #[error("episode already ended")]
    EpisodeFinished,

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = UdrlError> = std::result::Result<T, E>;

impl UdrlError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        UdrlError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        UdrlError::Csv {
            path: path.into(),
            source,
        }
    }
}
