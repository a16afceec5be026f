//! Periodic-in-time boundary value problems for the one-dimensional
//! hyperbolic equation
//!
//! ```text
//! w_tt - a(x,t)^2 w_xx + a1 w_t + a2 w_x + a3 w = f,   0 < x < 1,
//! w_x(0,t) = r0(t) w(0,t),   w_x(1,t) = r1(t) w(1,t),   w(x,t+T) = w(x,t),
//! ```
//!
//! solved through the Riemann invariants `u1 = w_t + a w_x`,
//! `u2 = w_t - a w_x` and an integral reformulation along characteristics.

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod grid;
pub mod kernels;
pub mod numeric;
pub mod problem;
pub mod resonance;
pub mod riemann;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, GridPair, GridSpec};
pub use problem::{validate, Coefficients, ProblemSpec, ValidationReport};
pub use scalar::Real;
pub use solver::{solve, SolveOptions, SolveResult, Solver, Strategy};

pub type GridFunctionF64 = GridFunction<f64>;
pub type GridFunctionF32 = GridFunction<f32>;
pub type GridPairF64 = GridPair<f64>;
pub type GridPairF32 = GridPair<f32>;
