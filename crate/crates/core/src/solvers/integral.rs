use std::f64::consts::PI;

use super::{instrumented, sylvester_report, Method, SolverReport, SylvesterProblem};
use crate::expm::{expm_neg, ChebyshevExpTable, DEFAULT_CROSSOVER};
use crate::hodlr::{HodlrConfig, HodlrMatrix, Truncation};
use crate::linalg::gauss_legendre;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralOptions {
    /// Number of Gauss–Legendre nodes `m`.
    pub points: usize,
    /// Parameter `L` of the substitution `t = L cot²(θ/2)`.
    pub l: f64,
    /// Degree of the rational Chebyshev table used for large `t‖A‖`.
    pub table_degree: usize,
    /// `t‖H‖₂` above which the rational approximant replaces Padé.
    pub crossover: f64,
    /// Evaluate quadrature terms concurrently (needs the `parallel` feature).
    pub parallel: bool,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        IntegralOptions { points: 32, l: 100.0, table_degree: 14, crossover: DEFAULT_CROSSOVER, parallel: false }
    }
}

/// Nodes `t_j = L cot²(θ_j/2)` and weights `ω_j = 2L w_j sin θ_j / (1 − cos θ_j)²`
/// for `∫₀^∞ g(t) dt`, from the `m`-point Gauss–Legendre rule mapped to `θ ∈ [0, π]`.
pub(crate) fn quadrature_nodes(m: usize, l: f64) -> Result<Vec<(f64, f64)>> {
    if m == 0 {
        return Err(Error::invalid("integral formula needs at least one quadrature point"));
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::invalid(format!("substitution parameter L must be > 0, got {l}")));
    }
    let (x, w) = gauss_legendre(m)?;
    Ok(x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            let theta = 0.5 * PI * (xi + 1.0);
            let (s, c) = theta.sin_cos();
            let t = l * (s / (1.0 - c)).powi(2);
            let omega = 2.0 * l * (0.5 * PI * wi) * s / (1.0 - c).powi(2);
            (t, omega)
        })
        .collect())
}

/// Terms whose norm is provably below this fraction of `‖X‖` are skipped.
const NEGLIGIBLE: f64 = 1e-4 * f64::EPSILON;

/// Half the reciprocal of the Lanczos estimate of `‖H⁻¹‖₂`: a safe lower
/// estimate of `λ_min(H)` for SPD `H`, or 0 when the inverse is unavailable.
fn lambda_min_lower(h: &HodlrMatrix, trunc: &Truncation) -> f64 {
    match h.inverse(trunc) {
        Ok(inv) => {
            let nrm = inv.two_norm_estimate();
            if nrm.is_finite() && nrm > 0.0 {
                0.5 / nrm
            } else {
                0.0
            }
        }
        Err(_) => 0.0,
    }
}

/// Whether node `(t, ω)` contributes to `X` at all. Since
/// `‖X‖ ≥ ‖C‖ / (‖A‖ + ‖B‖)`, the term `ω e^{-tA} C e^{-tB}` is relatively
/// bounded by `ω e^{-t(λ_A + λ_B)} (‖A‖ + ‖B‖)`.
fn significant(t: f64, omega: f64, lam_sum: f64, norm_sum: f64) -> bool {
    omega * (-t * lam_sum).exp() * norm_sum > NEGLIGIBLE
}

/// Solves `AX + XB = C` by the quadrature `X ≈ Σ_j ω_j e^{-t_j A} C e^{-t_j B}`
/// of `X = ∫₀^∞ e^{-tA} C e^{-tB} dt`.
///
/// Exponentials use Padé when `t‖·‖₂ ≤ crossover`, the rational Chebyshev
/// approximant otherwise. Nodes where `e^{-tA}` has decayed so far that the
/// term is below roundoff relative to `X` are skipped; this typically removes
/// most large-`t` nodes. Terms are accumulated in ascending node order; in
/// parallel mode they are evaluated concurrently and summed pairwise in a fixed
/// tree, which reproduces the sequential result only up to roundoff.
pub fn integral_solve(prob: &SylvesterProblem, cfg: &HodlrConfig, opts: &IntegralOptions) -> Result<(HodlrMatrix, SolverReport)> {
    let (x, it, mem, elapsed, fl) = instrumented(|| integral_run(prob, cfg, opts))?;
    let report = sylvester_report(Method::Expint, prob, &x, it, mem, elapsed, fl)?;
    Ok((x, report))
}

/// The quadrature itself: `(X, nodes used, peak bytes)`.
pub(crate) fn integral_run(prob: &SylvesterProblem, cfg: &HodlrConfig, opts: &IntegralOptions) -> Result<(HodlrMatrix, usize, usize)> {
    cfg.validate()?;
    let nodes = quadrature_nodes(opts.points, opts.l)?;
    prob.check_spd()?;
    let table = ChebyshevExpTable::builtin(opts.table_degree)?;
    let trunc = cfg.truncation();
    let lyap = prob.is_lyapunov();
    let na = prob.a.two_norm_estimate();
    let nb = if lyap { na } else { prob.b.two_norm_estimate() };
    let sym = lyap && prob.c.is_structurally_symmetric();
    let la = lambda_min_lower(&prob.a, &trunc);
    let lb = if lyap { la } else { lambda_min_lower(&prob.b, &trunc) };
    let active: Vec<(f64, f64)> = nodes.iter().copied().filter(|&(t, w)| significant(t, w, la + lb, na + nb)).collect();
    let term = |j: usize| -> Result<(HodlrMatrix, usize)> {
        let (t, omega) = active[j];
        let ea = expm_neg(t, &prob.a, na, &table, cfg, opts.crossover)?;
        let eb = if lyap { None } else { Some(expm_neg(t, &prob.b, nb, &table, cfg, opts.crossover)?) };
        let mut y = ea.multiply(&prob.c, &trunc)?.multiply(eb.as_ref().unwrap_or(&ea), &trunc)?;
        if sym {
            y = y.symmetrized(&trunc);
        }
        let bytes = ea.bytes() + eb.as_ref().map_or(0, |m| m.bytes()) + y.bytes();
        y.scale_mut(omega);
        Ok((y, bytes))
    };
    if active.is_empty() {
        return Ok((prob.c.zeros_like(), nodes.len(), 0));
    }
    if opts.parallel {
        let terms = par::map_indexed(active.len(), true, term).into_iter().collect::<Result<Vec<_>>>()?;
        let mem = terms.iter().map(|(y, b)| y.bytes() + b).sum();
        let x = pairwise_sum(terms.into_iter().map(|t| t.0).collect(), &trunc)?;
        Ok((x, nodes.len(), mem))
    } else {
        let mut x = prob.c.zeros_like();
        let mut peak = 0;
        for j in 0..active.len() {
            let (y, bytes) = term(j)?;
            peak = peak.max(bytes + x.bytes());
            x = x.add(&y, &trunc)?;
        }
        Ok((x, nodes.len(), peak))
    }
}

fn pairwise_sum(mut terms: Vec<HodlrMatrix>, trunc: &Truncation) -> Result<HodlrMatrix> {
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.add(&b, trunc)?,
                None => a,
            });
        }
        terms = next;
    }
    Ok(terms.pop().expect("at least one term"))
}

/// Stored exponentials `e^{-t_j A}` for repeated Lyapunov solves with one `A`.
pub(crate) struct ExpintOperator {
    nodes: Vec<(f64, HodlrMatrix)>,
    trunc: Truncation,
}

impl ExpintOperator {
    pub fn new(a: &HodlrMatrix, cfg: &HodlrConfig, opts: &IntegralOptions) -> Result<Self> {
        crate::expm::probe_spd(a)?;
        let table = ChebyshevExpTable::builtin(opts.table_degree)?;
        let na = a.two_norm_estimate();
        let trunc = cfg.truncation();
        let la = lambda_min_lower(a, &trunc);
        let nodes = quadrature_nodes(opts.points, opts.l)?
            .into_iter()
            .filter(|&(t, w)| significant(t, w, 2.0 * la, 2.0 * na))
            .map(|(t, w)| Ok((w, expm_neg(t, a, na, &table, cfg, opts.crossover)?)))
            .collect::<Result<_>>()?;
        Ok(ExpintOperator { nodes, trunc })
    }

    pub fn apply(&self, c: &HodlrMatrix) -> Result<HodlrMatrix> {
        let sym = c.is_structurally_symmetric();
        let mut x = c.zeros_like();
        for (w, e) in &self.nodes {
            let mut y = e.multiply(c, &self.trunc)?.multiply(e, &self.trunc)?;
            if sym {
                y = y.symmetrized(&self.trunc);
            }
            x = x.add_scaled(*w, &y, &self.trunc)?;
        }
        Ok(x)
    }
}
