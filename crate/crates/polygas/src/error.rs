use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("root solve did not converge within {0} iterations")]
    NoConvergence(usize),

    /// A wave in some interface fan moved further than half a cell in one step.
    #[error("CFL violation: wave speed {speed:.6e} exceeds limit {limit:.6e}")]
    CflViolation { speed: f64, limit: f64 },

    /// The update produced a negative density (Lax-Friedrichs only; the
    /// Godunov averaging preserves nonnegativity).
    #[error("negative density {0:.6e} in cell {1}")]
    NegativeDensity(f64, usize),

    #[error("step aborted after {0} timestep halvings")]
    RetriesExhausted(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for the transient step failures that the driver retries with a
    /// halved timestep.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::CflViolation { .. } | Error::NegativeDensity(..)
        )
    }
}
