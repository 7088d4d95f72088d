use thiserror::Error;

/// Library error kinds. Numeric invariant violations found during a run are
/// reported through run summaries, not through this enum.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("fit unavailable: {0}")]
    FitUnavailable(String),

    #[error("linear algebra backend: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
