use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate trajectory: {0}")]
    DegenerateTrajectory(String),

    #[error("non-finite state at t = {t} s")]
    NonFinite { t: f64 },

    #[error("trajectory lacks a {0} phase")]
    MissingPhase(&'static str),

    #[error("target at radar")]
    TargetAtRadar,

    #[error("degenerate innovation covariance (condition number {0:e})")]
    DegenerateInnovation(f64),

    #[error("track already lost")]
    TrackAlreadyLost,

    #[error("bandwidth {bandwidth} Hz outside [{min}, {max}] Hz")]
    BandwidthOutOfRange { bandwidth: f64, min: f64, max: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trajectory has {have} samples, episode needs {need}")]
    TrajectoryTooShort { have: usize, need: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
