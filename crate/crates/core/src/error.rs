use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation precondition or type invariant was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Scenario or device configuration failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A phase-table search could not route the requested power.
    #[error("routing search failed: {0}")]
    Unroutable(String),

    /// A metric is undefined for the given trace (e.g. constant fringe).
    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
