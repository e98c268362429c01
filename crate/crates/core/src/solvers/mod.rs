//! Solvers for `AX + XB = C` and the generalized Lyapunov equation
//! `AX + XA + Σ M_j X M_jᵀ = C`.
//!
//! - [`dense_sylvester_oracle`]: eigendecomposition-based dense reference.
//! - [`sign_solve`]: Newton iteration for the matrix sign function in HODLR arithmetic.
//! - [`integral_solve`]: quadrature of `∫₀^∞ e^{-tA} C e^{-tB} dt`.
//! - [`cg_matrix_solve`]: conjugate gradients on the matrix operator (baseline).
//! - [`ek_lowrank_lyap`]: extended Krylov for low-rank right-hand sides.
//! - [`smw_generalized_solve`], [`neumann_generalized_solve`]: generalized equations.

mod cg;
mod dense;
mod generalized;
mod integral;
mod krylov;
mod sign;

pub use cg::{cg_matrix_solve, CgOptions, CgTruncation};
pub use dense::{dense_sylvester_oracle, generalized_kronecker_oracle};
pub use generalized::{neumann_generalized_solve, smw_generalized_solve, InnerSolver, NeumannOptions};
pub use integral::{integral_solve, IntegralOptions};
pub use krylov::ek_lowrank_lyap;
pub use sign::{sign_solve, SignOptions};

use std::fmt;
use std::time::Instant;

use crate::hodlr::HodlrMatrix;
use crate::linalg::DenseMatrix;
use crate::{bounds, flops, Error, Result};

/// `AX + XB = C` with symmetric `A`, `B` (positive definite for the
/// structured solvers).
#[derive(Debug, Clone)]
pub struct SylvesterProblem {
    pub a: HodlrMatrix,
    pub b: HodlrMatrix,
    pub c: HodlrMatrix,
    pub name: String,
}

impl SylvesterProblem {
    pub fn new(a: HodlrMatrix, b: HodlrMatrix, c: HodlrMatrix, name: impl Into<String>) -> Result<Self> {
        let n = a.rows();
        for (m, what) in [(&a, "A"), (&b, "B"), (&c, "C")] {
            if m.rows() != m.cols() || m.rows() != n {
                return Err(Error::invalid(format!(
                    "{what} is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(SylvesterProblem { a, b, c, name: name.into() })
    }

    /// Lyapunov problem `AX + XA = C`.
    pub fn lyapunov(a: HodlrMatrix, c: HodlrMatrix, name: impl Into<String>) -> Result<Self> {
        Self::new(a.clone(), a, c, name)
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// `B` is stored identically to `A`.
    pub fn is_lyapunov(&self) -> bool {
        self.a == self.b
    }

    /// Rayleigh-quotient probes on `A` and `B`.
    pub fn check_spd(&self) -> Result<()> {
        crate::expm::probe_spd(&self.a)?;
        if !self.is_lyapunov() {
            crate::expm::probe_spd(&self.b)?;
        }
        Ok(())
    }

    /// Dense copies `(A, B, C)`.
    pub fn to_dense(&self) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
        (self.a.to_dense(), self.b.to_dense(), self.c.to_dense())
    }
}

/// One correction term `M_j` of a generalized Lyapunov equation.
#[derive(Debug, Clone)]
pub enum CorrectionTerm {
    /// `M_j = U_j V_jᵀ` of small rank.
    LowRank { u: DenseMatrix, v: DenseMatrix },
    /// `M_j` with quasiseparable structure (Neumann solver only).
    Quasiseparable(HodlrMatrix),
}

impl CorrectionTerm {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            CorrectionTerm::LowRank { u, v } => u * v.transpose(),
            CorrectionTerm::Quasiseparable(m) => m.to_dense(),
        }
    }

    /// `M X Mᵀ` in HODLR arithmetic.
    pub(crate) fn apply(&self, x: &HodlrMatrix, trunc: &crate::Truncation) -> Result<HodlrMatrix> {
        match self {
            CorrectionTerm::LowRank { u, v } => {
                let core = crate::linalg::matmul_tn(v, &x.mul_dense(v));
                let mut out = x.zeros_like();
                out.add_lowrank(&crate::linalg::matmul(u, &core), u, trunc);
                Ok(out)
            }
            CorrectionTerm::Quasiseparable(m) => m.multiply(x, trunc)?.multiply(&m.transpose(), trunc),
        }
    }
}

/// `AX + XA + Σ M_j X M_jᵀ = C`.
#[derive(Debug, Clone)]
pub struct GeneralizedProblem {
    pub a: HodlrMatrix,
    pub c: HodlrMatrix,
    pub terms: Vec<CorrectionTerm>,
    pub name: String,
}

impl GeneralizedProblem {
    pub fn new(a: HodlrMatrix, c: HodlrMatrix, terms: Vec<CorrectionTerm>, name: impl Into<String>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n || c.rows() != n || c.cols() != n {
            return Err(Error::invalid("generalized problem: A and C must be square of equal size"));
        }
        for (j, t) in terms.iter().enumerate() {
            let ok = match t {
                CorrectionTerm::LowRank { u, v } => u.nrows() == n && v.nrows() == n && u.ncols() == v.ncols(),
                CorrectionTerm::Quasiseparable(m) => m.rows() == n && m.cols() == n,
            };
            if !ok {
                return Err(Error::invalid(format!("correction term {j} does not conform to n = {n}")));
            }
        }
        Ok(GeneralizedProblem { a, c, terms, name: name.into() })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// The plain Lyapunov part `AX + XA = C`.
    pub fn lyapunov_part(&self) -> SylvesterProblem {
        SylvesterProblem { a: self.a.clone(), b: self.a.clone(), c: self.c.clone(), name: self.name.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sign,
    Expint,
    Cg,
    Dense,
    Smw,
    Neumann,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Sign, Method::Expint, Method::Cg, Method::Dense, Method::Smw, Method::Neumann];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sign => "sign",
            Method::Expint => "expint",
            Method::Cg => "cg",
            Method::Dense => "dense",
            Method::Smw => "smw",
            Method::Neumann => "neumann",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub method: Method,
    /// Iterations, quadrature points or series terms, depending on the method.
    pub iterations: usize,
    /// Relative backward error of the returned solution.
    pub residual: f64,
    pub qs_rank: usize,
    /// Wall-clock seconds spent in the solver proper (residual excluded).
    pub elapsed: f64,
    /// Largest simultaneous HODLR storage observed, in bytes.
    pub memory_bytes: usize,
    /// Dense-kernel flops performed by the solver proper.
    pub flops: u64,
}

/// Times and flop-counts `f`, which returns the solution, iteration count and
/// peak memory estimate.
pub(crate) fn instrumented<T>(f: impl FnOnce() -> Result<(T, usize, usize)>) -> Result<(T, usize, usize, f64, u64)> {
    let start = Instant::now();
    let (out, flops) = flops::measure(f);
    let (x, iterations, memory) = out?;
    Ok((x, iterations, memory, start.elapsed().as_secs_f64(), flops))
}

/// Assembles the report for a Sylvester solution, computing the residual metric.
pub(crate) fn sylvester_report(
    method: Method,
    prob: &SylvesterProblem,
    x: &HodlrMatrix,
    iterations: usize,
    memory_bytes: usize,
    elapsed: f64,
    flops: u64,
) -> Result<SolverReport> {
    let residual = bounds::residual_sylvester(&prob.a, &prob.b, &prob.c, x)?;
    Ok(SolverReport { method, iterations, residual, qs_rank: x.hodlr_rank(), elapsed, memory_bytes, flops })
}

/// Solves densely via [`dense_sylvester_oracle`] and converts back to HODLR.
pub fn dense_solve(prob: &SylvesterProblem, cfg: &crate::HodlrConfig) -> Result<(HodlrMatrix, SolverReport)> {
    let (x, it, mem, elapsed, fl) = instrumented(|| {
        let (a, b, c) = prob.to_dense();
        let x = dense_sylvester_oracle(&a, &b, &c)?;
        let bytes = 8 * 4 * x.len();
        Ok((HodlrMatrix::from_dense(&x, cfg)?, 1, bytes))
    })?;
    let report = sylvester_report(Method::Dense, prob, &x, it, mem, elapsed, fl)?;
    Ok((x, report))
}
