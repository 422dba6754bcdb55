//! Physics-informed neural-network solver and criticality-search toolkit for
//! neutron-diffusion benchmark problems.
//!
//! The crate is organized around a small set of cooperating modules:
//!
//! * [`network`] — tanh networks with optional skip connections (channel-mixing
//!   layers) and their fully-connected degenerate form.
//! * [`autodiff`] — exact first and diagonal second derivatives of network
//!   outputs with respect to inputs, and exact parameter gradients of
//!   composite losses (including losses built from input derivatives).
//! * [`physics`] — the four benchmark problems: coefficients, PDE residual
//!   forms, initial/boundary conditions and the analytical series solution
//!   for the 1D slab problem.
//! * [`sampling`] — Latin-hypercube collocation sampling and residual-adaptive
//!   resampling.
//! * [`loss`] — composite loss assembly (PDE + weighted initial/boundary/data
//!   terms).
//! * [`optimize`] — L-BFGS with strong Wolfe line search and the training loop
//!   with resampling and early-stop hooks.
//! * [`oracles`] — classical reference solvers: explicit finite-difference
//!   time steppers and a two-group power-iteration eigensolver.
//! * [`criticality`] — steady-state detection and the k-effective search
//!   strategies (grid/binary and quadratic-fit).
//! * [`harness`] — experiment configuration, metrics, persistence and the
//!   command-line entry points.

pub mod autodiff;
pub mod criticality;
pub mod error;
pub mod harness;
pub mod loss;
pub mod network;
pub mod optimize;
pub mod oracles;
pub mod physics;
pub mod sampling;

pub use error::{Error, Result};
