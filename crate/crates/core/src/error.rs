use thiserror::Error;

/// Errors produced by the solvers and the verification machinery.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid configuration: bad grid sizes, non-positive dt, eps <= 0,
    /// field/grid shape mismatches, non-finite input data.
    #[error("configuration error: {0}")]
    Config(String),

    /// A state violates an invariant it is required to satisfy (for example
    /// the barotropic constraint needed by the vertical-velocity recovery).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The time integration produced non-finite values or the CFL guard
    /// would force the step below its floor.
    #[error("numerical blow-up at step {step} (t = {t}): {what}")]
    BlowUp { step: u64, t: f64, what: String },

    /// An initial-data recipe produced an identically zero field.
    #[error("degenerate initial data: {0}")]
    DegenerateData(String),

    /// A rate fit cannot be performed (zero error values, too few points).
    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),

    /// A ratio auditor hit an inconsistent combination (zero denominator
    /// with a nonzero numerator).
    #[error("numerical inconsistency: {0}")]
    Inconsistent(String),

    /// An audit was handed unusable input (for example fewer than two
    /// trajectory samples).
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
