//! Deterministic generators for the experiment families.
//!
//! Every generator is a pure function of its arguments; randomised ones take an
//! explicit seed and draw from `ChaCha8Rng`, so the same call always yields a
//! bit-identical HODLR tree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hodlr::{Banded, HodlrConfig, HodlrMatrix};
use crate::linalg::DenseMatrix;
use crate::solvers::{CorrectionTerm, GeneralizedProblem, SylvesterProblem};
use crate::{Error, Result};

/// `scale · trid(-1, 2, -1)` as an exact banded HODLR matrix.
pub fn laplacian(n: usize, scale: f64, cfg: &HodlrConfig) -> Result<HodlrMatrix> {
    HodlrMatrix::from_banded(&Banded::tridiagonal(n, -scale, 2.0 * scale, -scale)?, cfg)
}

fn uniform_grid(n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
}

/// Lyapunov problem with `A = (n−1)² trid(−1, 2, −1)` and `C_ij = log(τ + |x_i − x_j|)`
/// on the uniform grid `x_j = j/(n−1)` of `[0, 1]`.
pub fn laplace_log(n: usize, tau: f64, cfg: &HodlrConfig) -> Result<SylvesterProblem> {
    laplace_log_on(n, tau, (0.0, 1.0), cfg)
}

/// [`laplace_log`] with the grid placed on `[lo, hi]`; `A` keeps the `(n−1)²` scaling.
pub fn laplace_log_on(n: usize, tau: f64, domain: (f64, f64), cfg: &HodlrConfig) -> Result<SylvesterProblem> {
    if n < 3 {
        return Err(Error::invalid(format!("laplace-log needs n >= 3, got {n}")));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("tau must be > 0, got {tau}")));
    }
    if !(domain.1 > domain.0) {
        return Err(Error::invalid(format!("empty domain [{}, {}]", domain.0, domain.1)));
    }
    let h2 = ((n - 1) * (n - 1)) as f64;
    let a = laplacian(n, h2, cfg)?;
    let xs = uniform_grid(n, domain);
    let c = HodlrMatrix::from_function(|x, y| (tau + (x - y).abs()).ln(), &xs, &xs, cfg)?;
    SylvesterProblem::lyapunov(a, c, "laplace-log")
}

/// Cells in the heat-equation discretisation.
const HEAT_CELL: usize = 6;

/// Lyapunov problem of size `6m` from the heat-equation model:
/// `A = I_m ⊗ (a I₆ + e S₆) + e S_m ⊗ I₆` and
/// `C = I_m ⊗ (0.2·𝟏𝟏ᵀ + 0.8 I₆) + 0.1 S_m ⊗ 𝟏𝟏ᵀ`, with `S_k = trid(1, 0, 1)`,
/// `a = 1.36`, `e = −0.34`. The bandwidths are 6 and 11.
///
/// `A` has quasiseparable rank 6 at every split point. `C` has rank 1 across
/// splits that fall on cell boundaries. Those are exactly the splits of the
/// tree when `6m / block_size` is a power-of-two multiple of 6 (e.g. `m = 128, 256`).
pub fn heat_haber(m: usize, cfg: &HodlrConfig) -> Result<SylvesterProblem> {
    if m < 2 {
        return Err(Error::invalid(format!("heat problem needs m >= 2, got {m}")));
    }
    let (a_coef, e) = (1.36, -0.34);
    let n = HEAT_CELL * m;
    let cell = |i: usize| (i / HEAT_CELL, i % HEAT_CELL);
    let a = Banded::from_fn(n, HEAT_CELL, |i, j| {
        let ((p, r), (q, s)) = (cell(i), cell(j));
        let mut v = 0.0;
        if p == q {
            if r == s {
                v += a_coef;
            } else if r.abs_diff(s) == 1 {
                v += e;
            }
        }
        if p.abs_diff(q) == 1 && r == s {
            v += e;
        }
        v
    })?;
    let c = Banded::from_fn(n, 2 * HEAT_CELL - 1, |i, j| {
        let (p, q) = (cell(i).0, cell(j).0);
        if p == q {
            0.2 + if i == j { 0.8 } else { 0.0 }
        } else if p.abs_diff(q) == 1 {
            0.1
        } else {
            0.0
        }
    })?;
    SylvesterProblem::lyapunov(HodlrMatrix::from_banded(&a, cfg)?, HodlrMatrix::from_banded(&c, cfg)?, "heat")
}

/// Generalized Lyapunov problem from the integro-differential model:
/// `A = (n−1)² trid(−1, 2, −1)`, `C_ij = log(1 + |x_i − x_j|)` and one rank-one
/// term `M = u vᵀ` with `u = sin(3x)/(n−1)` and trapezoid weights in
/// `v = [½ r(x₁), r(x₂), …, r(x_{n−1}), ½ r(x_n)]`, `r = sin(3x)`.
pub fn integro_pde(n: usize, cfg: &HodlrConfig) -> Result<GeneralizedProblem> {
    let base = laplace_log(n, 1.0, cfg)?;
    let xs = uniform_grid(n, (0.0, 1.0));
    let r = |x: f64| (3.0 * x).sin();
    let u = DenseMatrix::from_fn(n, 1, |i, _| r(xs[i]) / (n - 1) as f64);
    let v = DenseMatrix::from_fn(n, 1, |i, _| {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        w * r(xs[i])
    });
    GeneralizedProblem::new(base.a, base.c, vec![CorrectionTerm::LowRank { u, v }], "integro")
}

fn diagonal(n: usize, f: impl FnMut(usize) -> f64) -> Vec<f64> {
    (0..n).map(f).collect()
}

/// Symmetric tridiagonal `shift I + scale T + diag(d)` with `T = trid(−1, 2, −1)`.
fn shifted_laplacian(n: usize, shift: f64, scale: f64, d: &[f64], cfg: &HodlrConfig) -> Result<HodlrMatrix> {
    let band = Banded::from_fn(n, 1, |i, j| if i == j { shift + 2.0 * scale + d[i] } else { -scale })?;
    HodlrMatrix::from_banded(&band, cfg)
}

/// Random symmetric tridiagonal matrix with entries in `[-1, 1]`.
fn random_tridiagonal(n: usize, rng: &mut ChaCha8Rng, cfg: &HodlrConfig) -> Result<HodlrMatrix> {
    let diag = diagonal(n, |_| rng.random_range(-1.0..1.0));
    let off = diagonal(n, |_| rng.random_range(-1.0..1.0));
    let band = Banded::from_fn(n, 1, |i, j| if i == j { diag[i] } else { off[i.min(j)] })?;
    HodlrMatrix::from_banded(&band, cfg)
}

/// Random dense symmetric matrix of quasiseparable rank one:
/// `C_ij = u_max(i,j) · v_min(i,j)` off the diagonal, random diagonal.
pub fn random_semiseparable(n: usize, rng: &mut impl Rng, cfg: &HodlrConfig) -> Result<HodlrMatrix> {
    let u = diagonal(n, |_| rng.random_range(-1.0..1.0));
    let v = diagonal(n, |_| rng.random_range(-1.0..1.0));
    let d = diagonal(n, |_| rng.random_range(-1.0..1.0));
    let c = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => d[i],
        _ => u[i.max(j)] * v[i.min(j)],
    });
    HodlrMatrix::from_dense(&c, cfg)
}

fn random_diagonal(n: usize, rng: &mut ChaCha8Rng, cfg: &HodlrConfig) -> HodlrMatrix {
    HodlrMatrix::from_diagonal(&diagonal(n, |_| rng.random_range(-1.0..1.0)), cfg.block_size)
}

/// The structure-preservation experiments, with every right-hand side variant:
///
/// 1. `AX + XA = C_i`, `A = 0.2 I + T + D` (`D` random, nonnegative diagonal,
///    so `λ(A) ⊂ [0.2, ∞)`); `C₁` random symmetric tridiagonal, `C₂` random
///    symmetric of quasiseparable rank one.
/// 2. `AX + XA = C`, `A = T − 1.99 I` (indefinite), `C` random diagonal.
/// 3. `AX + XB = C_i`, `A = 0.2 I + 3.45 T`, `B = −(0.5 I + 3.375 T)`, so
///    `λ(A) ⊂ [0.2, 14]` and `λ(−B) ⊂ [0.5, 14]` interlace; `C_i` as in case 1.
/// 4. `AX + XA = C`, `A = T`, `C` random diagonal.
///
/// Here `T = trid(−1, 2, −1)`.
pub fn structure_test_variants(case: usize, n: usize, seed: u64, cfg: &HodlrConfig) -> Result<Vec<SylvesterProblem>> {
    if n < 8 {
        return Err(Error::invalid(format!("structure tests need n >= 8, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = vec![0.0; n];
    let name = format!("test{case}");
    match case {
        1 | 3 => {
            let (a, b) = if case == 1 {
                let d = diagonal(n, |_| rng.random_range(0.0..1.0));
                let a = shifted_laplacian(n, 0.2, 1.0, &d, cfg)?;
                (a.clone(), a)
            } else {
                let a = shifted_laplacian(n, 0.2, 3.45, &zero, cfg)?;
                let b = shifted_laplacian(n, 0.5, 3.375, &zero, cfg)?.scaled(-1.0);
                (a, b)
            };
            let c1 = random_tridiagonal(n, &mut rng, cfg)?;
            let c2 = random_semiseparable(n, &mut rng, cfg)?;
            Ok(vec![
                SylvesterProblem::new(a.clone(), b.clone(), c1, format!("{name}a"))?,
                SylvesterProblem::new(a, b, c2, format!("{name}b"))?,
            ])
        }
        2 | 4 => {
            let shift = if case == 2 { -1.99 } else { 0.0 };
            let a = shifted_laplacian(n, shift, 1.0, &zero, cfg)?;
            let c = random_diagonal(n, &mut rng, cfg);
            Ok(vec![SylvesterProblem::lyapunov(a, c, name)?])
        }
        _ => Err(Error::invalid(format!("unknown structure test case {case} (expected 1..=4)"))),
    }
}

/// The first variant of [`structure_test_variants`].
pub fn structure_tests(case: usize, n: usize, seed: u64, cfg: &HodlrConfig) -> Result<SylvesterProblem> {
    Ok(structure_test_variants(case, n, seed, cfg)?.swap_remove(0))
}

/// Random SPD Sylvester problem: `A`, `B` symmetric pentadiagonal with random
/// off-diagonal entries in `[-1, 1]` and diagonals chosen to make them strictly
/// diagonally dominant (`λ ≥ 1`); `C` random symmetric of quasiseparable rank one.
pub fn random_spd(n: usize, seed: u64, cfg: &HodlrConfig) -> Result<SylvesterProblem> {
    if n < 3 {
        return Err(Error::invalid(format!("random-spd needs n >= 3, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spd = |rng: &mut ChaCha8Rng| -> Result<HodlrMatrix> {
        let mut band = Banded::zeros(n, 2)?;
        for i in 0..n {
            for j in i + 1..(i + 3).min(n) {
                let v = rng.random_range(-1.0..1.0);
                band.set(i, j, v);
                band.set(j, i, v);
            }
        }
        for i in 0..n {
            let row: f64 = (i.saturating_sub(2)..(i + 3).min(n)).filter(|&j| j != i).map(|j| band.get(i, j).abs()).sum();
            band.set(i, i, 1.0 + row + rng.random_range(0.0..1.0));
        }
        HodlrMatrix::from_banded(&band, cfg)
    };
    let a = spd(&mut rng)?;
    let b = spd(&mut rng)?;
    let c = random_semiseparable(n, &mut rng, cfg)?;
    SylvesterProblem::new(a, b, c, "random-spd")
}
