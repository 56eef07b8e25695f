//! Error values shared across the crate.
//!
//! Cone and spacelike violations are errors, not panics: the flow steppers
//! must be able to detect loss of convexity or of spacelikeness and halt
//! with a diagnosable state.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// Argument outside the operation's domain (bad order k, index, radius...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Principal curvatures left the Gamma_k cone (sigma_j <= 0 for some j <= k).
    #[error("cone violation at {location}: sigma_{order} = {value:.6e} <= 0")]
    ConeViolation {
        location: String,
        order: usize,
        value: f64,
    },

    /// Discrete gradient reached the light cone: |Du|^2 > 1 - eps_guard.
    #[error("spacelike guard violated at {location}: |Du| = {grad_norm:.12}")]
    Spacelike { location: String, grad_norm: f64 },

    /// Input field is not (strictly) convex where the operation requires it.
    #[error("convexity lost at {location}: {detail}")]
    Convexity { location: String, detail: String },

    /// Requested explicit step exceeds the stability bound.
    #[error("CFL violation: dt = {requested:.6e} exceeds bound {required:.6e}")]
    Cfl { requested: f64, required: f64 },

    /// Two fields that must share a grid/clock do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Snapshot or config text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

impl CoreError {
    pub fn domain(msg: impl Into<String>) -> Self {
        CoreError::Domain(msg.into())
    }
}
