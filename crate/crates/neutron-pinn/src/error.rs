//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Point dimensionality does not match the network input width.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A loss or residual evaluated to a non-finite value.
    #[error("divergence in {context}: non-finite value encountered")]
    Divergence { context: String },

    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A point fell outside the material map.
    #[error("point ({x}, {y}) outside material map")]
    OutsideMap { x: f64, y: f64 },

    /// Explicit time stepper would violate its stability bound.
    #[error("FDM stability violated: D*v*dt*sum(1/dx^2)*2 = {factor} > 1")]
    UnstableStep { factor: f64 },

    /// Iterative solver did not converge within its iteration cap.
    #[error("{solver} failed to converge after {iterations} iterations")]
    NoConvergence { solver: String, iterations: usize },

    /// Criticality search bracket does not change sign.
    #[error("no sign change of phi_t over [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    /// Quadratic fit degenerate (collinear samples).
    #[error("degenerate quadratic fit")]
    DegenerateFit,

    /// Malformed input file (material map, checkpoint, config).
    #[error("parse error in {what}: {detail}")]
    Parse { what: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
