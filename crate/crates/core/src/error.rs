use thiserror::Error;

/// Errors raised by the kinetics library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate collision: {0}")]
    DegenerateCollision(String),

    #[error("cross section {kind} is singular at theta = {theta}")]
    SingularAngle { kind: &'static str, theta: f64 },

    #[error("cross section {kind} is singular at relative momentum g = {g}")]
    SingularMomentum { kind: &'static str, g: f64 },

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("invalid Lorentz transform: residual {residual:.3e} exceeds {tolerance:.1e}")]
    InvalidTransform { residual: f64, tolerance: f64 },

    #[error("Picard iteration diverged at c = {c} after {iterations} iterations (last gap {last_gap:.3e}); reduce the amplitude b")]
    Divergence { c: f64, iterations: usize, last_gap: f64 },

    #[error("bracket ordering violated at sweep {sweep} by {violation:.3e}; initial data too large for the smallness regime")]
    SmallnessViolation { sweep: usize, violation: f64 },

    #[error("rate fit needs at least 3 positive points, got {0}")]
    InsufficientData(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
