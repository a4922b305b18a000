use thiserror::Error;

use crate::lattice::GridIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("all points coincide")]
    Coincident,

    #[error("repeated points")]
    RepeatedPoints,

    #[error("lines or planes are parallel")]
    Parallel,

    #[error("points are not collinear (residual {residual:e})")]
    NotCollinear { residual: f64 },

    #[error("point {index} is off its line (residual {residual:e})")]
    OffLine { index: usize, residual: f64 },

    #[error("planes are not concurrent (residual {residual:e})")]
    NotConcurrent { residual: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("index {index} is outside window")]
    OutOfWindow { index: GridIndex },

    #[error("cell {index} is unset")]
    Unset { index: GridIndex },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("genericity violation at {cell}: {what}")]
    Genericity { cell: GridIndex, what: String },

    #[error("Lelieuvre closure fails at {cell} (residual {residual:e})")]
    Closure { cell: GridIndex, residual: f64 },

    #[error("singular denominator at {cell}")]
    Singular { cell: GridIndex },

    #[error("zero value where a nonzero one is required: {0}")]
    Zero(String),

    #[error("infinite cross vertex (rho_i + rho_j vanishes)")]
    InfiniteCrossVertex,

    #[error("{what} inconsistent at {cell} (residual {residual:e})")]
    Inconsistent {
        what: String,
        cell: GridIndex,
        residual: f64,
    },

    #[error("invariant violated: {what} (residual {residual:e})")]
    Invariant { what: String, residual: f64 },

    #[error("net status is {0}, hyperbolic required")]
    NotHyperbolic(String),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl Error {
    /// True for failures of a numerical solver (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Genericity { .. }
                | Error::Closure { .. }
                | Error::Singular { .. }
                | Error::Inconsistent { .. }
                | Error::Invariant { .. }
                | Error::InfiniteCrossVertex
                | Error::Degenerate(_)
                | Error::Parallel
        )
    }
}
