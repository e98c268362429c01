use super::{instrumented, sylvester_report, Method, SolverReport, SylvesterProblem};
use crate::hodlr::{HodlrConfig, HodlrMatrix, Truncation};
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

/// How CG iterates are stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CgTruncation {
    /// Dense iterates, no truncation.
    None,
    /// Dense iterates with entries outside `|i − j| ≤ k` dropped after each update.
    Band(usize),
    /// HODLR iterates truncated with the given configuration.
    Hodlr(HodlrConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Stop when `‖C − 𝓛(X)‖_F ≤ tol ‖C‖_F`.
    pub tol: f64,
    /// Defaults to `⌈10√κ⌉` with `κ = (λ_max(A) + λ_max(B)) / (λ_min(A) + λ_min(B))`.
    pub max_iter: Option<usize>,
    pub truncation: CgTruncation,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-10, max_iter: None, truncation: CgTruncation::None }
    }
}

/// Estimated condition number of `X ↦ AX + XB`.
fn operator_condition(prob: &SylvesterProblem, cfg: &HodlrConfig) -> Result<f64> {
    let trunc = cfg.truncation();
    let extremes = |h: &HodlrMatrix| -> Result<(f64, f64)> {
        let inv = h.inverse(&trunc)?;
        Ok((1.0 / inv.two_norm_estimate(), h.two_norm_estimate()))
    };
    let (amin, amax) = extremes(&prob.a)?;
    let (bmin, bmax) = if prob.is_lyapunov() { (amin, amax) } else { extremes(&prob.b)? };
    Ok((amax + bmax) / (amin + bmin))
}

/// The vector space CG works in: dense or HODLR matrices.
trait Space: Clone {
    fn apply(&self, prob: &SylvesterProblem) -> Result<Self>;
    fn inner(&self, other: &Self) -> f64;
    /// `self + beta * other`, followed by the iterate truncation.
    fn axpy(&self, beta: f64, other: &Self) -> Result<Self>;
    fn bytes(&self) -> usize;
}

#[derive(Clone)]
struct Dense {
    m: DenseMatrix,
    band: Option<usize>,
}

impl Space for Dense {
    fn apply(&self, prob: &SylvesterProblem) -> Result<Self> {
        let ax = prob.a.mul_dense(&self.m);
        let xb = prob.b.tmul_dense(&self.m.transpose()).transpose();
        Ok(Dense { m: ax + xb, band: self.band })
    }

    fn inner(&self, other: &Self) -> f64 {
        self.m.dot(&other.m)
    }

    fn axpy(&self, beta: f64, other: &Self) -> Result<Self> {
        let mut m = &self.m + &other.m * beta;
        if let Some(k) = self.band {
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    if i.abs_diff(j) > k {
                        m[(i, j)] = 0.0;
                    }
                }
            }
        }
        Ok(Dense { m, band: self.band })
    }

    fn bytes(&self) -> usize {
        8 * self.m.len()
    }
}

#[derive(Clone)]
struct Hodlr {
    h: HodlrMatrix,
    trunc: Truncation,
}

impl Space for Hodlr {
    fn apply(&self, prob: &SylvesterProblem) -> Result<Self> {
        let ax = prob.a.multiply(&self.h, &self.trunc)?;
        let xb = self.h.multiply(&prob.b, &self.trunc)?;
        Ok(Hodlr { h: ax.add(&xb, &self.trunc)?, trunc: self.trunc })
    }

    fn inner(&self, other: &Self) -> f64 {
        self.h.inner(&other.h).expect("iterates share one tree shape")
    }

    fn axpy(&self, beta: f64, other: &Self) -> Result<Self> {
        Ok(Hodlr { h: self.h.add_scaled(beta, &other.h, &self.trunc)?, trunc: self.trunc })
    }

    fn bytes(&self) -> usize {
        self.h.bytes()
    }
}

/// Returns `(X, iterations, peak bytes)`.
fn cg<S: Space>(prob: &SylvesterProblem, c: S, zero: S, tol: f64, max_iter: usize) -> Result<(S, usize, usize)> {
    let cnorm = c.inner(&c).sqrt();
    let mut x = zero;
    if cnorm == 0.0 {
        return Ok((x, 0, 0));
    }
    let mut r = c;
    let mut p = r.clone();
    let mut rr = r.inner(&r);
    let mut history = Vec::new();
    let mut peak = 0;
    for it in 0..max_iter {
        let q = p.apply(prob)?;
        let pq = p.inner(&q);
        if !(pq > 0.0) {
            return Err(Error::Numerical(format!("CG: operator not positive definite (pᵀ𝓛p = {pq:e})")));
        }
        let alpha = rr / pq;
        x = x.axpy(alpha, &p)?;
        r = r.axpy(-alpha, &q)?;
        let rr_next = r.inner(&r);
        let rel = rr_next.sqrt() / cnorm;
        history.push(rel);
        peak = peak.max(x.bytes() + r.bytes() + p.bytes() + q.bytes());
        if rel <= tol {
            return Ok((x, it + 1, peak));
        }
        p = r.axpy(rr_next / rr, &p)?;
        rr = rr_next;
    }
    let last = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NoConvergence { method: "cg", iterations: max_iter, last, history })
}

/// Conjugate gradients for `𝓛(X) = AX + XB = C` in the matrix inner product
/// `⟨X, Y⟩ = trace(XᵀY)`. The returned solution is converted to HODLR with `cfg`.
pub fn cg_matrix_solve(prob: &SylvesterProblem, cfg: &HodlrConfig, opts: &CgOptions) -> Result<(HodlrMatrix, SolverReport)> {
    cfg.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!("CG tolerance must be > 0, got {}", opts.tol)));
    }
    prob.check_spd()?;
    let max_iter = match opts.max_iter {
        Some(m) => m,
        None => (10.0 * operator_condition(prob, cfg)?.sqrt()).ceil() as usize,
    };
    let (x, it, mem, elapsed, fl) = instrumented(|| match opts.truncation {
        CgTruncation::Hodlr(tc) => {
            tc.validate()?;
            let trunc = tc.truncation();
            let c = Hodlr { h: prob.c.clone(), trunc };
            let zero = Hodlr { h: prob.c.zeros_like(), trunc };
            let (x, it, mem) = cg(prob, c, zero, opts.tol, max_iter)?;
            Ok((x.h, it, mem))
        }
        trunc => {
            let band = match trunc {
                CgTruncation::Band(k) => Some(k),
                _ => None,
            };
            let n = prob.n();
            let c = Dense { m: prob.c.to_dense(), band };
            let zero = Dense { m: DenseMatrix::zeros(n, n), band };
            let (x, it, mem) = cg(prob, c, zero, opts.tol, max_iter)?;
            Ok((HodlrMatrix::from_dense(&x.m, cfg)?, it, mem))
        }
    })?;
    let report = sylvester_report(Method::Cg, prob, &x, it, mem, elapsed, fl)?;
    Ok((x, report))
}
