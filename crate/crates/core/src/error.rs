use thiserror::Error;

/// Errors produced by the skyline library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arm {index}: {reason}")]
    InvalidArm { index: usize, reason: String },

    #[error("instance must contain at least one arm")]
    EmptyInstance,

    #[error("arm index {index} out of range for {len} arms")]
    ArmOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty block {lo}..={hi}")]
    EmptyBlock { lo: usize, hi: usize },

    #[error("level loop exceeded the cap of {cap} levels")]
    LevelCapExceeded { cap: usize },

    #[error("no estimate recorded for skyline member {0}")]
    MissingEstimate(usize),

    #[error("invalid skyline: {0}")]
    InvalidSkyline(String),

    #[error("decode failure: level {level} has no arm in the skyline")]
    DecodeFailure { level: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_unit_open(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie strictly inside (0, 1), got {value}"
        )))
    }
}
