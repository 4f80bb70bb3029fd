//! Numerical companions to classical summability and harmonic analysis.
//!
//! Each module pairs a small constructive algorithm with the inequality it is
//! supposed to satisfy, so experiments can check claimed constants against
//! observed ones:
//!
//! - [`series`]: partial sums, Cesàro and Abel summation, Cauchy products.
//! - [`linalg`]: p-norms, inner products, projections onto simple convex sets.
//! - [`operator`]: operator norms, Neumann inversion, spectral radius,
//!   operator averages and the mean ergodic theorem for unitary matrices.
//! - [`fourier`]: Fourier coefficients on a discretized circle, Fejér and
//!   Abel–Poisson means, rotation averages.
//! - [`maximal`]: discrete Hardy–Littlewood maximal functions, the weak-type
//!   and `L^p` inequalities, covering selections.
//! - [`ergodic`]: shift spaces and finite permutation systems, Birkhoff
//!   averages, transference, Krylov–Bogolyubov averaging.
//! - [`metric`]: ultrametric sequence spaces, doubling constants, snowflake
//!   transforms and box-counting dimension.
//! - [`battery`]: named experiment batteries producing [`report::RunResult`]s.
//!
//! Independent trials run through [`exec::Execution`], which uses rayon when
//! the `parallel` feature is enabled and falls back to a plain loop otherwise.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod complex;
pub mod ergodic;
pub mod error;
pub mod exec;
pub mod fourier;
pub mod linalg;
pub mod maximal;
pub mod metric;
pub mod operator;
pub mod report;
pub mod series;

pub use complex::C64;
pub use error::{Error, Result};
pub use exec::Execution;
pub use report::{Check, Report, RunResult};
