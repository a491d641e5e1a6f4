//! Dense quadratic programming toolkit for gradient episodic memory.
//!
//! * [`qp`]: generic convex QPs `min ½zᵀCz + wᵀz s.t. Az ≤ b`, their
//!   Lagrangian duals and duality-gap certificates.
//! * [`nnq`]: solvers for the dual's canonical form over `v ≥ 0`.
//! * [`gem`]: projection of a proposed gradient onto the cone of updates that
//!   do not conflict with earlier tasks' memory gradients.
//! * [`harness`]: a small continual-learning testbed exercising the
//!   projection on synthetic regression tasks.
//! * [`batch`]: data-parallel evaluation over many independent problems.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the linear-algebra notation.
#![allow(clippy::needless_range_loop)]

pub mod batch;
pub mod error;
pub mod gem;
pub mod harness;
pub mod linalg;
pub mod nnq;
pub mod qp;

pub use error::{Error, Result};
pub use gem::{project, GradientSet, ProjectionConfig, ProjectionResult};
pub use linalg::Matrix;
pub use nnq::{DualSolver, NonnegQP, SolverConfig, SolverResult, SolverStatus};
pub use qp::{Certificate, DualQP, PrimalQP};
