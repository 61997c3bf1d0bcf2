//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operands act on incompatible Hilbert spaces.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative scheme failed to reach its tolerance within its cap.
    /// Never silently truncated; the message carries the reached residual.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A dense-matrix routine was asked for a system above its size cap.
    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
