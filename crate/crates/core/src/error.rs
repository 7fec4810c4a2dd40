use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not convex: {0}")]
    NotConvex(String),

    #[error("moment undefined: {0}")]
    MomentUndefined(String),

    #[error("moment overflow: {0}")]
    MomentOverflow(String),

    /// Limit-theorem case logic hit a parameter boundary it does not cover.
    #[error("uncovered boundary: {0}")]
    UncoveredBoundary(String),

    #[error("bounds indeterminate: {0}")]
    BoundsIndeterminate(String),

    #[error("estimation inconsistent: {0}")]
    EstimationInconsistent(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("checksum mismatch: header says {expected}, data hashes to {found}")]
    ChecksumMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
