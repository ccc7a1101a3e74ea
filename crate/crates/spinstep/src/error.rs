//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building states or stepping them.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector that must be normalized has (numerically) zero length.
    #[error("zero vector at sphere index {sphere}")]
    ZeroVector { sphere: usize },

    /// `w_i + W_i = 0`: the projected midpoint is undefined for this pair.
    #[error("antipodal pair at sphere index {sphere}: |w + W| = {norm:.3e}")]
    AntipodalPair { sphere: usize, norm: f64 },

    /// Two states (or a state and a rotation tuple) disagree on the sphere count.
    #[error("dimension mismatch: {left} spheres vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A matrix claimed to be a rotation fails the orthogonality/determinant check.
    #[error("entry {index} is not a rotation matrix (defect {defect:.3e})")]
    NotARotation { index: usize, defect: f64 },

    /// Two vortices (anti)collide: `2 - 2 w_i · w_j` below threshold.
    #[error("vortex collision between spheres {i} and {j}: 2 - 2 w_i·w_j = {separation:.3e}")]
    VortexCollision { i: usize, j: usize, separation: f64 },

    /// The implicit solver ran out of iterations.
    #[error("implicit solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A state left the `C(w)/c > 0` component where the Casimir rescaling is defined.
    #[error("invalid Casimir level: C(w)/c = {ratio:.3e}")]
    InvalidLevel { ratio: f64 },

    /// A step produced a sphere component whose radius drifted past tolerance.
    #[error("unit-norm violation at sphere {sphere}: | |w| - 1 | = {deviation:.3e}")]
    UnitNormViolation { sphere: usize, deviation: f64 },

    /// Invalid configuration or construction parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A trajectory step failed; carries the step index.
    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach a trajectory step index to an error bubbling out of a one-step map.
    pub fn at_step(self, step: usize) -> Error {
        Error::StepFailed {
            step,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. }
            | Error::AntipodalPair { .. }
            | Error::VortexCollision { .. }
            | Error::UnitNormViolation { .. }
            | Error::InvalidLevel { .. }
            | Error::ZeroVector { .. } => true,
            Error::StepFailed { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
