//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or non-finite input data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The temperature `T = ∂U/∂S` came out non-positive at an evaluated
    /// state. Every downstream formula divides by `T`, so this aborts the
    /// computation instead of propagating garbage.
    #[error("temperature assumption violated: T = {temperature} <= 0 at q = {q:?}, S = {entropy}")]
    AssumptionViolation {
        q: Vec<f64>,
        entropy: f64,
        temperature: f64,
    },

    /// A closed-form expression was requested outside the parameter regime
    /// where it is valid (e.g. the critically/over-damped oscillator).
    #[error("degenerate regime: {0}")]
    DegenerateRegime(String),

    /// A scalar evaluation overflowed (e.g. the internal-energy exponential).
    #[error("range error: {0}")]
    RangeError(String),

    /// The implicit step solver failed to converge.
    #[error("solver failure: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    /// The regularity matrix (the implicit-function Jacobian of the step
    /// residual) is singular, so the discrete flow is not defined there.
    #[error("regularity failure: |det| = {determinant:.3e} below tolerance")]
    RegularityFailure { determinant: f64 },

    /// A numerical evaluation produced a non-finite value.
    #[error("numerical error: {0}")]
    NonFinite(String),

    /// Attaches the failing step index to an inner error.
    #[error("at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with the trajectory step index at which it occurred.
    pub fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
