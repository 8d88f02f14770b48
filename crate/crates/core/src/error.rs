use thiserror::Error;

/// Errors raised by the solver and the functional evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the evaluated function.
    #[error("domain error in {what}: {value}")]
    Domain { what: &'static str, value: f64 },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge on [{lower}, {upper}] (estimate {estimate:e})")]
    QuadratureNonconvergence { lower: f64, upper: f64, estimate: f64 },

    /// A mesh or array has an invalid size.
    #[error("size error: {0}")]
    Size(String),

    /// Two arrays that must agree in length do not.
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// An initial condition produced negative density.
    #[error("initial condition is negative at cell {cell} (u = {value})")]
    Negativity { cell: usize, value: f64 },

    /// A state contains NaN or infinite entries.
    #[error("non-finite value in {field} at index {index}")]
    NonFinite { field: &'static str, index: usize },

    /// A parameter violates an invariant of its owning type.
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: &'static str, reason: String },

    /// A run needed by a study ended without completing.
    #[error("run on {n_cells} cells ended with status {status}")]
    RunFailed { n_cells: usize, status: String },

    /// The operation is only defined for a different diffusion exponent.
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
