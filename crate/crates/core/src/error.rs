use thiserror::Error;

/// Errors produced by the geometry, solver and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The grid spacing is too coarse for the body being discretized.
    #[error("resolution too coarse: {0}")]
    Resolution(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    /// An internal consistency check failed.
    #[error("internal inconsistency: {0}")]
    Internal(String),

    /// Malformed experiment or solver configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
