use thiserror::Error;

/// Errors produced by the lineshape, solver and quadrature routines.
#[derive(Debug, Error)]
pub enum TpaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("steady-state solve failed: {reason} (condition estimate {condition:.3e})")]
    SolverFailure { reason: String, condition: f64 },

    #[error("harmonic truncation did not converge: last change {last_change:.3e} at n_max = {n_max} (cap {cap})")]
    Truncation {
        n_max: usize,
        cap: usize,
        last_change: f64,
    },

    #[error("quadrature did not converge: estimated error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("locator failed: {0}")]
    Locator(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl TpaError {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, TpaError::InvalidParameter(_) | TpaError::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, TpaError>;

pub(crate) fn invalid(msg: impl Into<String>) -> TpaError {
    TpaError::InvalidParameter(msg.into())
}
