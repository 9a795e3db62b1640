use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the stimulus generation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("blur calibration failed: {0}")]
    Calibration(String),

    #[error("frame dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("empty frame sequence")]
    EmptySequence,

    #[error("molecule {0} is not a reaction partner")]
    NotReactionPartner(u32),

    #[error("speed percentage {0} outside [0, 100]")]
    SpeedOutOfRange(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    BadImage { path: PathBuf, message: String },

    #[error("manifest error: {0}")]
    Manifest(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
