//! Crate-wide error type.

use thiserror::Error;

/// Every failure mode reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter lies outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A measure does not carry the total mass required by its level.
    #[error("mass mismatch: expected {expected}, found {found}")]
    MassMismatch { expected: f64, found: f64 },

    /// A textual measure specification could not be parsed.
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    /// The adaptive integrator could not shrink its step enough.
    #[error("step-size underflow at t = {t}")]
    StepFailure { t: f64 },

    /// A point lies outside the domain of validity of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Cauchy transform was evaluated on top of an atom.
    #[error("evaluation point coincides with an atom at {0}")]
    PoleAtZ(f64),

    /// Stieltjes inversion produced a density below the tolerance floor.
    #[error("negative density {value} at x = {x}")]
    NegativeDensity { x: f64, value: f64 },

    /// A square-root branch could not be selected reliably.
    #[error("branch ambiguity: {0}")]
    BranchAmbiguity(String),

    /// A logarithm was evaluated on its cut.
    #[error("point {0} lies on a branch cut")]
    BranchCut(String),

    /// An iterative solver exhausted its budget.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The intersection traces do not have the required zero pattern.
    #[error("intersection traces violate general position")]
    GeneralPositionViolated,

    /// A quadrature failed to stabilise under grid refinement.
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    /// The exponential tail fit did not decay.
    #[error("tail fit does not decay (rate {rate})")]
    TailDivergence { rate: f64 },

    /// A matrix expected to be Hermitian is not.
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    /// A requested projection rank is out of range.
    #[error("insufficient rank: {0}")]
    InsufficientRank(String),

    /// Serialisation or I/O failure.
    #[error("i/o: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Library result alias.
pub type Result<T> = std::result::Result<T, Error>;
