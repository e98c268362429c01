//! Rank-structured solvers for Sylvester and Lyapunov equations `AX + XB = C`
//! whose coefficients are (numerically) quasiseparable.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense kernels (SVD, LU, symmetric eigensolver, Gauss–Legendre rules).
//! - [`hodlr`]: the HODLR format and its truncated arithmetic.
//! - [`expm`]: matrix exponentials in HODLR arithmetic (Padé and rational Chebyshev).
//! - [`solvers`]: sign iteration, integral formula, matrix CG, extended Krylov,
//!   and the generalized-equation solvers.
//! - [`bounds`]: singular-value decay predictors and residual metrics.
//! - [`problems`]: deterministic generators for the experiment families.
//! - [`cli`]: the `qsylv` command-line harness.
//!
//! With the `parallel` feature (on by default) independent subtree products and
//! quadrature terms run on the rayon pool; without it everything is sequential.

pub mod bounds;
pub mod cli;
mod error;
pub mod expm;
pub mod flops;
pub mod hodlr;
pub mod linalg;
mod par;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
pub use hodlr::{HodlrConfig, HodlrMatrix, LowRank, Truncation};
pub use linalg::DenseMatrix;
