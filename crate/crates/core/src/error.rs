//! Error type shared by the coefficient algebra, the quadrature routines and
//! the finite element solvers.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Material parameters outside the admissible range (μ > 0, λ ≥ 0).
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    /// A scalar argument violated a precondition (e.g. r ≥ 1 in a log scaling).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Point outside the domain of definition of a cell field (|y| < 1).
    #[error("domain error: {0}")]
    Domain(String),

    /// The sampled scaling family produced inconsistent extrapolants.
    #[error("regime classification failed: {0}")]
    Classification(String),

    /// Doubling the quadrature order moved the value by more than the
    /// declared tolerance.
    #[error("quadrature accuracy failure: {0}")]
    QuadratureAccuracy(String),

    /// Iterative linear solver hit its iteration cap.
    #[error("linear solver failed after {iterations} iterations (relative residual {relative_residual:.3e})")]
    Solver {
        iterations: usize,
        relative_residual: f64,
        /// Tail of the relative residual history, most recent last.
        history_tail: Vec<f64>,
    },

    /// No ε-cell fits inside ω.
    #[error("empty fiber layout: {0}")]
    EmptyLayout(String),

    /// Mesh too coarse to represent the fiber radius.
    #[error("fiber under-resolved: {0}")]
    Resolution(String),

    /// The γ = 0 limit functional is conjectural; solving it requires an
    /// explicit opt-in.
    #[error("conjectural regime: {0}")]
    Conjectural(String),

    /// Expression parsing or evaluation failure.
    #[error("expression error: {0}")]
    Expr(String),

    /// Scenario configuration is malformed or internally inconsistent.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
