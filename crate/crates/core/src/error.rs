use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lambda = {lambda} is within {distance:e} of the norm {norm}")]
    PoleProximity {
        lambda: f64,
        norm: u64,
        distance: f64,
    },

    #[error("no sign change bracketing a root in ({lower}, {upper}): {reason}")]
    BracketFailure {
        lower: f64,
        upper: f64,
        reason: String,
    },

    #[error("no norm lies within L = {window} of lambda = {lambda}")]
    EmptyWindow { lambda: f64, window: f64 },

    #[error("quadrature step {h} is too coarse for radius {r} (need h <= r/50)")]
    StepTooCoarse { h: f64, r: f64 },

    #[error("cache format error at line {line}: {reason}")]
    CacheFormat { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Whether the error comes from a numerical failure (as opposed to bad
    /// input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PoleProximity { .. } | Error::BracketFailure { .. } | Error::EmptyWindow { .. }
        )
    }
}
