//! Norm-preserving time integration of the Landau–Lifshitz–Gilbert equation
//! with exchange-only effective field, `m_t = -m × Δm - α m × (m × Δm)`, on
//! the unit interval or unit cube with homogeneous Neumann boundaries.
//!
//! The main scheme pairs a semi-implicit BDF1 predictor with a per-cell
//! Crank–Nicolson rotation, so `|m|` is preserved to roundoff without any
//! projection step. Explicit (scheme 1), Helmholtz-smoothed (scheme 3) and
//! BDF1-projection variants are provided for comparison, together with a
//! manufactured-solution harness for convergence and norm studies.

// Range checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod grid;
pub mod harness;
pub mod manufactured;
pub mod rotation;
pub mod schemes;
pub mod solvers;
pub mod vec3;

pub use error::{Error, Result};
pub use grid::{Dim, Grid, VectorField};
pub use schemes::{ForcingMode, ForcingTime, Scheme, SchemeConfig};
pub use solvers::{SolveReport, SolverConfig, SolverMethod};
