use thiserror::Error;

/// Errors raised across the front laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Arrays or grids whose shapes do not line up.
    #[error("structural mismatch: {0}")]
    Structural(String),

    /// An input outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("eigen iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },

    /// The shooting functional or simulation found no front with positive speed.
    #[error("no positive-speed front (estimated speed {speed:.6})")]
    NoPositiveSpeed { speed: f64 },

    /// A tracked level set left the computational box.
    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    /// Not enough samples to build the requested quantity.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
