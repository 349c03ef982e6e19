use thiserror::Error;

use crate::primal::QuantizationResult;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("support is not contained in the convex hull of the grid")]
    OutsideHull,

    #[error("measures are not in convex order: no martingale coupling exists (Strassen)")]
    NotInConvexOrder,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Lloyd iteration hit the iteration cap. The last iterate is returned so
    /// callers can inspect or continue from it.
    #[error("Lloyd iteration cap of {iterations} reached (last displacement {displacement:e})")]
    LloydCap {
        iterations: usize,
        displacement: f64,
        last: Box<QuantizationResult>,
    },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("numerical breakdown in the simplex after {iterations} iterations")]
    NumericalBreakdown { iterations: usize },

    #[error("grid is not stationary for the coupling's first marginal (residual {residual:e})")]
    NotStationary { residual: f64 },

    #[error("splitting kernel has no row for support point #{index} of the second marginal")]
    MissingKernelRow { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
