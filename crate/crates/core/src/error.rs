use thiserror::Error;

/// Errors shared across the tracking pipeline.
#[derive(Debug, Error)]
pub enum MpftError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("track {track} failed at episode {episode}: {reason}")]
    TrackFailure {
        track: String,
        episode: u64,
        reason: String,
    },

    #[error("parse error at row {row}: {reason}")]
    Parse { row: usize, reason: String },
}

pub type Result<T, E = MpftError> = std::result::Result<T, E>;
