use super::{instrumented, sylvester_report, Method, SolverReport, SylvesterProblem};
use crate::hodlr::{HodlrConfig, HodlrMatrix, Truncation};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignOptions {
    /// Iteration stops once `‖ΔA‖_F + ‖ΔB‖_F + ‖ΔC‖_F ≤ √eps`.
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for SignOptions {
    fn default() -> Self {
        SignOptions { eps: f64::EPSILON, max_iter: 100 }
    }
}

/// Solves `AX + XB = C` through the sign of `[[A, -C], [0, -B]]`.
///
/// The block Newton iteration `A ← ½(A + A⁻¹)`, `B ← ½(B + B⁻¹)`,
/// `C ← ½(C + A⁻¹ C B⁻¹)` runs in HODLR arithmetic truncated at
/// `cfg.threshold`; `C` tends to `2X`. Only the first step is scaled, by
/// `α = √(‖S₀⁻¹‖₂ / ‖S₀‖₂)`, with both norms estimated from `A` and `B`.
/// For `B = A` only one sequence of inverses is formed.
pub fn sign_solve(prob: &SylvesterProblem, cfg: &HodlrConfig, opts: &SignOptions) -> Result<(HodlrMatrix, SolverReport)> {
    cfg.validate()?;
    prob.check_spd()?;
    let b = (!prob.is_lyapunov()).then_some(&prob.b);
    let (x, it, mem, elapsed, fl) = instrumented(|| {
        let run = sign_iterate(&prob.a, b, &prob.c, cfg, opts, false)?;
        Ok((run.x, run.iterations, run.peak_bytes))
    })?;
    let report = sylvester_report(Method::Sign, prob, &x, it, mem, elapsed, fl)?;
    Ok((x, report))
}

pub(crate) struct SignRun {
    pub x: HodlrMatrix,
    pub iterations: usize,
    pub peak_bytes: usize,
    pub op: Option<SignOperator>,
}

/// The inverses of a finished sign iteration, replayable on new right-hand sides.
pub(crate) struct SignOperator {
    alpha: f64,
    steps: Vec<(HodlrMatrix, Option<HodlrMatrix>)>,
    trunc: Truncation,
}

impl SignOperator {
    /// Approximates `𝓛⁻¹(C)` by running the `C` recursion with the stored inverses.
    pub fn apply(&self, c: &HodlrMatrix) -> Result<HodlrMatrix> {
        let sym = self.steps.first().is_some_and(|s| s.1.is_none()) && c.is_structurally_symmetric();
        let mut ci = c.clone();
        for (k, (ainv, binv)) in self.steps.iter().enumerate() {
            let s = if k == 0 { self.alpha } else { 1.0 };
            ci = c_step(&ci, ainv, binv.as_ref().unwrap_or(ainv), s, sym, &self.trunc)?;
        }
        Ok(ci.scaled(0.5))
    }
}

fn invert(h: &HodlrMatrix, trunc: &Truncation, which: &str, it: usize) -> Result<HodlrMatrix> {
    let inv = h.inverse(trunc).map_err(|e| match e {
        Error::Singular { pivot } => {
            Error::Numerical(format!("sign iteration: iterate {which}_{it} is singular (pivot {pivot})"))
        }
        other => other,
    })?;
    if !inv.frobenius().is_finite() {
        return Err(Error::Numerical(format!("sign iteration: inverse of {which}_{it} is not finite")));
    }
    Ok(inv)
}

/// `½(s H + H⁻¹ / s)`.
fn newton_step(h: &HodlrMatrix, hinv: &HodlrMatrix, s: f64, sym: bool, trunc: &Truncation) -> Result<HodlrMatrix> {
    let next = h.scaled(0.5 * s).add_scaled(0.5 / s, hinv, trunc)?;
    Ok(if sym { next.symmetrized(trunc) } else { next })
}

/// `½(s C + A⁻¹ C B⁻¹ / s)`.
fn c_step(
    c: &HodlrMatrix,
    ainv: &HodlrMatrix,
    binv: &HodlrMatrix,
    s: f64,
    sym: bool,
    trunc: &Truncation,
) -> Result<HodlrMatrix> {
    let mut y = ainv.multiply(c, trunc)?.multiply(binv, trunc)?;
    if sym {
        y = y.symmetrized(trunc);
    }
    c.scaled(0.5 * s).add_scaled(0.5 / s, &y, trunc)
}

fn increment(next: &HodlrMatrix, prev: &HodlrMatrix, trunc: &Truncation) -> Result<f64> {
    Ok(next.sub(prev, trunc)?.frobenius())
}

/// Runs the block iteration; `b = None` means `B = A`.
pub(crate) fn sign_iterate(
    a: &HodlrMatrix,
    b: Option<&HodlrMatrix>,
    c: &HodlrMatrix,
    cfg: &HodlrConfig,
    opts: &SignOptions,
    keep_inverses: bool,
) -> Result<SignRun> {
    if !(opts.eps > 0.0) {
        return Err(Error::invalid(format!("sign iteration: eps must be > 0, got {}", opts.eps)));
    }
    let trunc = cfg.truncation();
    let tol = opts.eps.sqrt();
    let sym_a = a.is_structurally_symmetric();
    let sym_b = b.is_some_and(|b| b.is_structurally_symmetric());
    let sym_c = b.is_none() && c.is_structurally_symmetric();
    let mut ai = a.clone();
    let mut bi = b.cloned();
    let mut ci = c.clone();
    let mut alpha = 1.0;
    let mut steps = Vec::new();
    let mut peak = 0;
    let mut last = f64::NAN;
    let mut history = Vec::new();
    for it in 0..opts.max_iter {
        let ainv = invert(&ai, &trunc, "A", it)?;
        let binv = bi.as_ref().map(|bi| invert(bi, &trunc, "B", it)).transpose()?;
        let s = if it == 0 {
            let norm = ai.two_norm_estimate().max(bi.as_ref().map_or(0.0, |b| b.two_norm_estimate()));
            let inv_norm = ainv.two_norm_estimate().max(binv.as_ref().map_or(0.0, |b| b.two_norm_estimate()));
            alpha = (inv_norm / norm).sqrt();
            if !alpha.is_finite() || alpha <= 0.0 {
                return Err(Error::Numerical(format!("sign iteration: scaling factor {alpha}")));
            }
            alpha
        } else {
            1.0
        };
        let a_next = newton_step(&ai, &ainv, s, sym_a, &trunc)?;
        let b_next = match (&bi, &binv) {
            (Some(bi), Some(binv)) => Some(newton_step(bi, binv, s, sym_b, &trunc)?),
            _ => None,
        };
        let c_next = c_step(&ci, &ainv, binv.as_ref().unwrap_or(&ainv), s, sym_c, &trunc)?;

        let da = increment(&a_next, &ai, &trunc)?;
        let db = match (&b_next, &bi) {
            (Some(bn), Some(bi)) => increment(bn, bi, &trunc)?,
            _ => da,
        };
        let dc = increment(&c_next, &ci, &trunc)?;
        last = da + db + dc;
        history.push(last);

        peak = peak.max(
            ai.bytes()
                + ainv.bytes()
                + a_next.bytes()
                + ci.bytes()
                + c_next.bytes()
                + bi.as_ref().map_or(0, |m| m.bytes())
                + binv.as_ref().map_or(0, |m| m.bytes())
                + b_next.as_ref().map_or(0, |m| m.bytes()),
        );
        if keep_inverses {
            steps.push((ainv, binv));
        }
        ai = a_next;
        bi = b_next;
        ci = c_next;
        if !last.is_finite() {
            return Err(Error::Numerical(format!("sign iteration: non-finite increment at step {it}")));
        }
        if last <= tol {
            let op = keep_inverses.then(|| SignOperator { alpha, steps, trunc });
            return Ok(SignRun { x: ci.scaled(0.5), iterations: it + 1, peak_bytes: peak, op });
        }
    }
    Err(Error::NoConvergence { method: "sign", iterations: opts.max_iter, last, history })
}
