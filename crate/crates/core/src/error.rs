use thiserror::Error;

/// Errors produced by motion ingestion, feature extraction and alignment.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("timestamps are not strictly increasing at frame {frame}")]
    NonMonotoneTimes { frame: usize },

    #[error("frame {frame} has {found} joints, expected {expected}")]
    JointCountMismatch {
        frame: usize,
        found: usize,
        expected: usize,
    },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("unknown joint `{0}`")]
    UnknownJoint(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("keyframe detection failed: {0}")]
    Keyframes(String),

    #[error("degenerate correspondence: {0}")]
    DegeneratePath(String),

    #[error("matrix is not a valid PSD matrix: {0}")]
    NotPsd(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("anchor chain is infeasible: {0}")]
    InfeasibleAnchors(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
