//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by the simulator core.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Geometry that admits no well-defined angle or half-angle.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The Fisher information matrix cannot be inverted reliably.
    #[error("singular Fisher information: condition number {cond:.3e} exceeds {limit:.1e}")]
    SingularInformation { cond: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
