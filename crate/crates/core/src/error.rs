use thiserror::Error;

/// Errors raised by the consensus library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Zero is not a simple eigenvalue of the Laplacian, so the
    /// stationary distribution (and the consensus value) is not unique.
    #[error("ambiguous null space: {0}")]
    Ambiguity(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("numerical blow-up (non-finite state) at t = {t}")]
    Blowup { t: f64 },

    #[error("time {t} outside stored range [{start}, {end}]")]
    Range { t: f64, start: f64, end: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
