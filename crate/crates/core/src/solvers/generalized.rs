use super::integral::{integral_run, ExpintOperator};
use super::krylov::ExtendedKrylov;
use super::sign::{sign_iterate, SignOperator};
use super::{instrumented, CorrectionTerm, GeneralizedProblem, IntegralOptions, Method, SignOptions, SolverReport};
use crate::bounds::residual_generalized;
use crate::hodlr::{HodlrConfig, HodlrMatrix};
use crate::linalg::{self, DenseMatrix};
use crate::{Error, Result};

/// Solver used for the plain Lyapunov equations inside the generalized solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolver {
    Sign(SignOptions),
    Expint(IntegralOptions),
}

impl Default for InnerSolver {
    fn default() -> Self {
        InnerSolver::Sign(SignOptions::default())
    }
}

/// `𝓛⁻¹ C` for `𝓛(X) = AX + XA`.
fn lyapunov_solve(a: &HodlrMatrix, c: &HodlrMatrix, cfg: &HodlrConfig, inner: &InnerSolver) -> Result<(HodlrMatrix, usize)> {
    match inner {
        InnerSolver::Sign(opts) => {
            let run = sign_iterate(a, None, c, cfg, opts, false)?;
            Ok((run.x, run.peak_bytes))
        }
        InnerSolver::Expint(opts) => {
            let prob = super::SylvesterProblem::lyapunov(a.clone(), c.clone(), "")?;
            let (x, _, mem) = integral_run(&prob, cfg, opts)?;
            Ok((x, mem))
        }
    }
}

fn report(method: Method, prob: &GeneralizedProblem, x: &HodlrMatrix, parts: (usize, usize, f64, u64)) -> Result<SolverReport> {
    let (iterations, memory_bytes, elapsed, flops) = parts;
    let residual = residual_generalized(prob, x)?.value;
    Ok(SolverReport { method, iterations, residual, qs_rank: x.hodlr_rank(), elapsed, memory_bytes, flops })
}

/// Solves `AX + XA + Σ_j U_j V_jᵀ X V_j U_jᵀ = C` by the Sherman–Morrison–Woodbury
/// formula.
///
/// `X̂ = 𝓛⁻¹C` comes from one structured Lyapunov solve. For every term the
/// solutions `𝓛⁻¹(u_a u_bᵀ)` over column pairs of `U_j` share one extended
/// Krylov basis `W_j`. With them the capacitance system
/// `(I + 𝒱ᵀ𝓛⁻¹𝒰) y = 𝒱ᵀX̂` of size `Σ r_j²` is assembled, and
/// `X = X̂ − Σ W_j (Σ y_ab Y_ab) W_jᵀ`.
pub fn smw_generalized_solve(prob: &GeneralizedProblem, cfg: &HodlrConfig, inner: &InnerSolver) -> Result<(HodlrMatrix, SolverReport)> {
    cfg.validate()?;
    let factors: Vec<(&DenseMatrix, &DenseMatrix)> = prob
        .terms
        .iter()
        .map(|t| match t {
            CorrectionTerm::LowRank { u, v } => Ok((u, v)),
            CorrectionTerm::Quasiseparable(_) => {
                Err(Error::invalid("SMW solver needs low-rank correction terms; use the Neumann solver"))
            }
        })
        .collect::<Result<_>>()?;
    crate::expm::probe_spd(&prob.a)?;
    let (x, it, mem, elapsed, fl) = instrumented(|| {
        let trunc = cfg.truncation();
        let (xhat, mut peak) = lyapunov_solve(&prob.a, &prob.c, cfg, inner)?;
        if factors.iter().all(|(u, _)| u.ncols() == 0) {
            return Ok((xhat, 0, peak));
        }
        let ainv = prob.a.inverse(&trunc)?;
        peak = peak.max(xhat.bytes() + ainv.bytes());
        let solve_a = |b: &DenseMatrix| Ok(ainv.mul_dense(b));
        let ek_tol = cfg.threshold.max(1e-14);

        // per term: basis W_j and projected solutions Y_ab
        let mut bases = Vec::with_capacity(factors.len());
        for &(u, _) in &factors {
            let r = u.ncols();
            let cols: Vec<DenseMatrix> = (0..r).map(|a| u.columns(a, 1).into_owned()).collect();
            let mut ys = Vec::new();
            let mut history = Vec::new();
            let (ek, ok) = ExtendedKrylov::grow(&prob.a, &solve_a, u, |ek| {
                ys.clear();
                let mut worst: f64 = 0.0;
                for fa in &cols {
                    for fb in &cols {
                        let y = ek.project_solve(fa, fb)?;
                        let scale = fa.norm() * fb.norm();
                        if scale > 0.0 {
                            worst = worst.max(ek.residual(&y, fa, fb) / scale);
                        }
                        ys.push(y);
                    }
                }
                history.push(worst);
                Ok(worst <= ek_tol)
            })?;
            if !ok {
                let last = history.last().copied().unwrap_or(f64::NAN);
                return Err(Error::NoConvergence { method: "extended krylov", iterations: history.len(), last, history });
            }
            if ys.first().is_none_or(|y| y.ncols() != ek.w.ncols()) {
                ys = cols
                    .iter()
                    .flat_map(|fa| cols.iter().map(move |fb| (fa, fb)))
                    .map(|(fa, fb)| ek.project_solve(fa, fb))
                    .collect::<Result<_>>()?;
            }
            bases.push((ek.w, ys));
        }

        // capacitance system over indices (j, a, b)
        let index: Vec<(usize, usize, usize)> = factors
            .iter()
            .enumerate()
            .flat_map(|(j, (u, _))| {
                let r = u.ncols();
                (0..r).flat_map(move |a| (0..r).map(move |b| (j, a, b)))
            })
            .collect();
        let dim = index.len();
        let mut k = DenseMatrix::identity(dim, dim);
        let mut w = DenseMatrix::zeros(dim, 1);
        let xv: Vec<DenseMatrix> = factors.iter().map(|(_, v)| linalg::matmul_tn(v, &xhat.mul_dense(v))).collect();
        for (row, &(i, c, d)) in index.iter().enumerate() {
            w[(row, 0)] = xv[i][(c, d)];
        }
        for (i, &(_, vi)) in factors.iter().enumerate() {
            for (j, (wj, ys)) in bases.iter().enumerate() {
                let g = linalg::matmul_tn(wj, vi);
                let rj = factors[j].0.ncols();
                for (col, &(jj, a, b)) in index.iter().enumerate() {
                    if jj != j {
                        continue;
                    }
                    let gyg = linalg::matmul(&linalg::matmul_tn(&g, &ys[a * rj + b]), &g);
                    for (row, &(ii, c, d)) in index.iter().enumerate() {
                        if ii == i {
                            k[(row, col)] += gyg[(c, d)];
                        }
                    }
                }
            }
        }
        let y = linalg::solve_dense(&k, &w)?;

        let mut x = xhat;
        for (j, (wj, ys)) in bases.iter().enumerate() {
            let rj = factors[j].0.ncols();
            let mut core = DenseMatrix::zeros(wj.ncols(), wj.ncols());
            for (col, &(jj, a, b)) in index.iter().enumerate() {
                if jj == j {
                    core += &ys[a * rj + b] * y[(col, 0)];
                }
            }
            x.add_lowrank(&(linalg::matmul(wj, &core) * -1.0), wj, &trunc);
        }
        Ok((x, dim, peak))
    })?;
    let rep = report(Method::Smw, prob, &x, (it, mem, elapsed, fl))?;
    Ok((x, rep))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannOptions {
    /// Stop once `‖Z_ℓ‖_F ≤ series_tol ‖X_ℓ‖_F`.
    pub series_tol: f64,
    pub max_terms: usize,
    pub inner: InnerSolver,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        NeumannOptions { series_tol: 1e-12, max_terms: 100, inner: InnerSolver::default() }
    }
}

enum LyapOperator {
    Sign(SignOperator),
    Expint(ExpintOperator),
}

impl LyapOperator {
    fn apply(&self, c: &HodlrMatrix) -> Result<HodlrMatrix> {
        match self {
            LyapOperator::Sign(op) => op.apply(c),
            LyapOperator::Expint(op) => op.apply(c),
        }
    }
}

/// Number of consecutive non-decreasing term norms that signal divergence.
const DIVERGENCE_STREAK: usize = 3;

/// Solves the generalized Lyapunov equation by the Neumann series
/// `X = Σ_i Z_i`, `𝓛(Z₀) = C`, `𝓛(Z_{i+1}) = −Σ_j M_j Z_i M_jᵀ`.
///
/// The inner Lyapunov solver is set up once and replayed on every term. The
/// series is valid when `ρ(𝓛⁻¹𝓜) < 1`. When `‖Z_{i+1}‖_F / ‖Z_i‖_F ≥ 1` for
/// three consecutive terms, [`Error::Divergence`] is raised.
pub fn neumann_generalized_solve(
    prob: &GeneralizedProblem,
    cfg: &HodlrConfig,
    opts: &NeumannOptions,
) -> Result<(HodlrMatrix, SolverReport)> {
    cfg.validate()?;
    if !(opts.series_tol > 0.0) || opts.max_terms == 0 {
        return Err(Error::invalid("Neumann series needs series_tol > 0 and max_terms >= 1"));
    }
    crate::expm::probe_spd(&prob.a)?;
    let (x, it, mem, elapsed, fl) = instrumented(|| {
        let trunc = cfg.truncation();
        let (op, z0) = match &opts.inner {
            InnerSolver::Sign(so) => {
                let run = sign_iterate(&prob.a, None, &prob.c, cfg, so, true)?;
                (LyapOperator::Sign(run.op.expect("inverses kept")), run.x)
            }
            InnerSolver::Expint(io) => {
                let op = ExpintOperator::new(&prob.a, cfg, io)?;
                let z0 = op.apply(&prob.c)?;
                (LyapOperator::Expint(op), z0)
            }
        };
        let mut x = z0.clone();
        let mut z = z0;
        let mut znorm = z.frobenius();
        let mut streak = 0;
        let mut peak = 0;
        let mut history = Vec::new();
        for terms in 1..=opts.max_terms {
            let xnorm = x.frobenius();
            history.push(znorm / xnorm);
            if znorm <= opts.series_tol * xnorm || znorm == 0.0 {
                return Ok((x, terms, peak));
            }
            if terms == opts.max_terms {
                break;
            }
            let mut rhs = z.zeros_like();
            for term in &prob.terms {
                rhs = rhs.sub(&term.apply(&z, &trunc)?, &trunc)?;
            }
            let next = op.apply(&rhs)?;
            let next_norm = next.frobenius();
            if !next_norm.is_finite() {
                return Err(Error::Numerical("Neumann series: non-finite term".into()));
            }
            if next_norm == 0.0 {
                return Ok((x, terms, peak));
            }
            let ratio = next_norm / znorm;
            streak = if ratio >= 1.0 { streak + 1 } else { 0 };
            if streak >= DIVERGENCE_STREAK {
                return Err(Error::Divergence { streak, ratio });
            }
            peak = peak.max(x.bytes() + z.bytes() + rhs.bytes() + next.bytes());
            x = x.add(&next, &trunc)?;
            z = next;
            znorm = next_norm;
        }
        let last = history.last().copied().unwrap_or(f64::NAN);
        Err(Error::NoConvergence { method: "neumann", iterations: opts.max_terms, last, history })
    })?;
    let rep = report(Method::Neumann, prob, &x, (it, mem, elapsed, fl))?;
    Ok((x, rep))
}

#[cfg(test)]
mod tests {
    use super::super::testing::*;
    use super::*;
    use crate::hodlr::Banded;
    use crate::solvers::{generalized_kronecker_oracle, sign_solve};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tridiagonal_spd(n: usize, seed: u64, bs: usize) -> HodlrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut band = Banded::zeros(n, 1).unwrap();
        for i in 0..n {
            band.set(i, i, 3.0 + rng.random_range(0.0..1.0));
            if i + 1 < n {
                let off = rng.random_range(-1.0..1.0);
                band.set(i, i + 1, off);
                band.set(i + 1, i, off);
            }
        }
        HodlrMatrix::from_banded(&band, &cfg(bs)).unwrap()
    }

    fn random_c(n: usize, seed: u64, bs: usize) -> HodlrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        HodlrMatrix::from_dense(&(&c + c.transpose()), &cfg(bs)).unwrap()
    }

    fn oracle(prob: &GeneralizedProblem) -> DenseMatrix {
        let ms: Vec<DenseMatrix> = prob.terms.iter().map(|t| t.to_dense()).collect();
        generalized_kronecker_oracle(&prob.a.to_dense(), &ms, &prob.c.to_dense()).unwrap()
    }

    #[test]
    fn smw_matches_kronecker_oracle() {
        let n = 16;
        let a = random_tridiagonal_spd(n, 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = DenseMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let v = DenseMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let prob = GeneralizedProblem::new(a, random_c(n, 3, 4), vec![CorrectionTerm::LowRank { u, v }], "smw").unwrap();
        let xo = oracle(&prob);
        for inner in [InnerSolver::default(), InnerSolver::Expint(IntegralOptions { l: 1.0, ..IntegralOptions::default() })] {
            let (x, rep) = smw_generalized_solve(&prob, &cfg(4), &inner).unwrap();
            let err = rel(&x.to_dense(), &xo);
            assert!(err < 1e-9, "{inner:?}: {err:e}");
            assert_eq!(rep.iterations, 1);
        }
    }

    #[test]
    fn smw_with_rank_two_terms() {
        let n = 40;
        let a = laplacian(n, 1.0, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut terms = Vec::new();
        for _ in 0..2 {
            let u = DenseMatrix::from_fn(n, 2, |_, _| 0.1 * rng.random_range(-1.0..1.0));
            let v = DenseMatrix::from_fn(n, 2, |_, _| 0.1 * rng.random_range(-1.0..1.0));
            terms.push(CorrectionTerm::LowRank { u, v });
        }
        let prob = GeneralizedProblem::new(a, random_c(n, 6, 8), terms, "smw2").unwrap();
        let (x, rep) = smw_generalized_solve(&prob, &cfg(8), &InnerSolver::default()).unwrap();
        assert_eq!(rep.iterations, 8);
        assert!(rel(&x.to_dense(), &oracle(&prob)) < 1e-9);
    }

    #[test]
    fn zero_terms_reduce_to_lyapunov() {
        let n = 32;
        let a = laplacian(n, 1.0, 8);
        let c = random_c(n, 7, 8);
        let zero = CorrectionTerm::LowRank { u: DenseMatrix::zeros(n, 1), v: DenseMatrix::zeros(n, 1) };
        let prob = GeneralizedProblem::new(a.clone(), c.clone(), vec![zero], "z").unwrap();
        let plain = sign_solve(&prob.lyapunov_part(), &cfg(8), &SignOptions::default()).unwrap().0.to_dense();
        let smw = smw_generalized_solve(&prob, &cfg(8), &InnerSolver::default()).unwrap().0.to_dense();
        assert!(rel(&smw, &plain) < 1e-12);
        let zq = CorrectionTerm::Quasiseparable(HodlrMatrix::zeros(n, 8));
        let prob = GeneralizedProblem::new(a, c, vec![zq], "zq").unwrap();
        let (x, rep) = neumann_generalized_solve(&prob, &cfg(8), &NeumannOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rel(&x.to_dense(), &plain) < 1e-12);
        assert!(matches!(
            smw_generalized_solve(&prob, &cfg(8), &InnerSolver::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn neumann_convergent_case() {
        let n = 32;
        let a = laplacian(n, 1.0, 8);
        let m = HodlrMatrix::from_banded(&Banded::tridiagonal(n, 0.01, 0.0, 0.01).unwrap(), &cfg(8)).unwrap();
        let prob = GeneralizedProblem::new(a, random_c(n, 8, 8), vec![CorrectionTerm::Quasiseparable(m)], "neu").unwrap();
        let xo = oracle(&prob);
        for inner in [InnerSolver::default(), InnerSolver::Expint(IntegralOptions { l: 30.0, points: 64, ..IntegralOptions::default() })] {
            let opts = NeumannOptions { inner, ..NeumannOptions::default() };
            let (x, rep) = neumann_generalized_solve(&prob, &cfg(8), &opts).unwrap();
            let err = rel(&x.to_dense(), &xo);
            assert!(err < 1e-9, "{inner:?}: {err:e}");
            assert!(rep.iterations > 1);
        }
    }

    #[test]
    fn neumann_divergent_case() {
        let n = 16;
        let a = laplacian(n, 1.0, 4);
        // λ_min(𝓛) = 2λ_min(A) and 𝓜 = M ⊗ M has spectral radius ‖M‖²
        // for symmetric M, so ρ(𝓛⁻¹𝓜) = 1.5 for M = s I with s² = 3λ_min(A).
        let lmin = 2.0 - 2.0 * (std::f64::consts::PI / (n + 1) as f64).cos();
        let m = HodlrMatrix::identity(n, 4).scaled((3.0 * lmin).sqrt());
        let prob = GeneralizedProblem::new(a, random_c(n, 9, 4), vec![CorrectionTerm::Quasiseparable(m)], "div").unwrap();
        match neumann_generalized_solve(&prob, &cfg(4), &NeumannOptions::default()) {
            Err(Error::Divergence { streak, ratio }) => {
                assert_eq!(streak, 3);
                assert!(ratio > 1.0);
            }
            other => panic!("{other:?}"),
        }
    }
}
