use thiserror::Error;

/// Errors raised by the counting, construction and verification layers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A value lies outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested scale is finer than the set can be counted faithfully.
    #[error("resolution error: scale m={requested} exceeds the maximum faithful scale {max}")]
    Resolution { requested: u64, max: u64 },

    /// A witness box was asked to hold more points than its height cap allows.
    #[error("capacity error: {count} points requested but only {capacity} rows fit under the height cap")]
    Capacity { count: u64, capacity: u64 },

    /// Invalid parameters for a constructor or estimator.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("empty set has no ratio")]
    EmptySet,

    #[error("schedule error: {0}")]
    Schedule(String),

    /// An explicit enumeration would exceed its work budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
