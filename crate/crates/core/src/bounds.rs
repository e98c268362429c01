//! Singular-value decay predictors for Sylvester solutions, ε-quasiseparable
//! rank measurement, and the backward-error residual metrics.

use std::f64::consts::PI;

use crate::hodlr::{split, HodlrMatrix, Truncation};
use crate::linalg::{self, DenseMatrix};
use crate::solvers::{CorrectionTerm, GeneralizedProblem};
use crate::{Error, Result};

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    0.5 * (a + b)
}

fn check_modulus(lambda: f64, what: &str) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what}: modulus must lie in (0, 1), got {lambda}")))
    }
}

/// Complete elliptic integral of the first kind,
/// `K(λ) = ∫₀¹ dt / √((1 − t²)(1 − λ²t²))`, via the arithmetic–geometric mean.
pub fn elliptic_k(lambda: f64) -> Result<f64> {
    check_modulus(lambda, "elliptic_k")?;
    Ok(PI / (2.0 * agm(1.0, (1.0 - lambda * lambda).sqrt())))
}

/// Grötzsch ring function `μ(λ) = (π/2) K(√(1 − λ²)) / K(λ)`.
pub fn grotzsch_mu(lambda: f64) -> Result<f64> {
    check_modulus(lambda, "grotzsch_mu")?;
    let comp = (1.0 - lambda * lambda).sqrt();
    Ok(0.5 * PI * elliptic_k(comp)? / elliptic_k(lambda)?)
}

/// Interval `[a, b]` with `0 < a ≤ b` containing the spectra of `A` and `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInterval {
    a: f64,
    b: f64,
}

impl SpectralInterval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !(b >= a) || !b.is_finite() {
            return Err(Error::invalid(format!("spectral interval needs 0 < a <= b, got [{a}, {b}]")));
        }
        Ok(SpectralInterval { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// `(ρ_elliptic, ρ_weak)`: `exp(π² / (2 μ(a/b)))` and `exp(π² / (2 ln(4b/a)))`.
///
/// A single-point spectrum (`a = b`) gives `ρ_elliptic = +∞`.
pub fn zolotarev_rho(iv: SpectralInterval) -> (f64, f64) {
    let ratio = iv.a / iv.b;
    let weak = (PI * PI / (2.0 * (4.0 / ratio).ln())).exp();
    let elliptic = if ratio >= 1.0 {
        f64::INFINITY
    } else {
        (PI * PI / (2.0 * grotzsch_mu(ratio).expect("ratio in (0, 1)"))).exp()
    };
    (elliptic, weak)
}

/// How the block rank `k` of the decay bound is assembled from the inputs'
/// quasiseparable ranks.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    /// `k = k_A + k_B + k_C`.
    General,
    /// Banded coefficients and right-hand side: `k = max(k_A + k_B, k_C)`.
    Banded,
    /// Generalized Lyapunov with low-rank terms of ranks `r_j`:
    /// `k = 2 k_A + k_C + Σ r_j`.
    Generalized(Vec<usize>),
}

/// Predicted decay `σ_{1+kℓ}(Y) / σ_1(Y) ≤ 4 ρ^{−2ℓ}` for every off-diagonal block `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayBound {
    pub rho: f64,
    pub k: usize,
}

impl DecayBound {
    /// `4 ρ^{−2ℓ}`.
    pub fn predicted(&self, l: usize) -> f64 {
        if self.rho.is_infinite() {
            return if l == 0 { 4.0 } else { 0.0 };
        }
        4.0 * self.rho.powf(-2.0 * l as f64)
    }

    /// Indices `ℓ ≥ 1` with `1 + kℓ ≤ len(s)` at which the singular values `s`
    /// (nonincreasing) exceed `predicted(ℓ)·s[0] + floor`.
    pub fn violations(&self, s: &[f64], floor: f64) -> Vec<usize> {
        if s.is_empty() || self.k == 0 {
            return Vec::new();
        }
        (1..)
            .take_while(|l| self.k * l < s.len())
            .filter(|&l| s[self.k * l] > self.predicted(l) * s[0] + floor)
            .collect()
    }
}

/// Decay bound for the solution's off-diagonal blocks, using the elliptic
/// (sharper) value of `ρ`.
pub fn offdiag_decay_bound(ka: usize, kb: usize, kc: usize, structure: &Structure, iv: SpectralInterval) -> DecayBound {
    let k = match structure {
        Structure::General => ka + kb + kc,
        Structure::Banded => (ka + kb).max(kc),
        Structure::Generalized(r) => 2 * ka + kc + r.iter().sum::<usize>(),
    };
    DecayBound { rho: zolotarev_rho(iv).0, k }
}

/// Relative tolerance below which singular values count as zero when
/// `eps = 0`; it absorbs the roundoff of the dense SVD.
const SVD_FLOOR: f64 = 4.0 * f64::EPSILON;

/// Largest `ε`-rank over the maximal off-diagonal blocks at every HODLR split
/// point (recursing down to 1×1 diagonal blocks). A block's `ε`-rank counts
/// `σ_i > max(ε, 4u)·σ_1`, `u` the unit roundoff.
pub fn eps_qs_rank(a: &DenseMatrix, eps: f64) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("eps_qs_rank: matrix must be square"));
    }
    linalg::ensure_finite(a, "matrix")?;
    Ok(qs_rank_rec(a, 0, a.nrows(), eps.max(SVD_FLOOR)))
}

fn qs_rank_rec(a: &DenseMatrix, start: usize, n: usize, tol: f64) -> usize {
    if n < 2 {
        return 0;
    }
    let (n1, n2) = split(n);
    let rank = |r0: usize, c0: usize, m: usize, k: usize| {
        let block = a.view((r0, c0), (m, k)).into_owned();
        match linalg::truncated_svd(&block, tol, m.min(k)) {
            Ok(svd) => svd.rank(),
            Err(_) => m.min(k),
        }
    };
    let lower = rank(start + n1, start, n2, n1);
    let upper = rank(start, start + n1, n1, n2);
    lower
        .max(upper)
        .max(qs_rank_rec(a, start, n1, tol))
        .max(qs_rank_rec(a, start + n1, n2, tol))
}

/// Truncates every off-diagonal block of `a` (at all HODLR levels, down to
/// leaves of size `block_size`) to singular values above the absolute
/// threshold `eps`.
pub fn truncate_blockwise(a: &DenseMatrix, eps: f64, block_size: usize) -> Result<HodlrMatrix> {
    if a.nrows() != a.ncols() || block_size < 1 || !(eps >= 0.0) {
        return Err(Error::invalid("truncate_blockwise: square input, block_size >= 1, eps >= 0"));
    }
    linalg::ensure_finite(a, "matrix")?;
    Ok(HodlrMatrix::from_dense_with(a, block_size, &Truncation::absolute(eps)))
}

/// Truncation used to form residuals: effectively exact, so the metric
/// measures the solution rather than the arithmetic.
fn residual_truncation() -> Truncation {
    Truncation::relative(f64::EPSILON)
}

/// `‖AX + XB − C‖_F / (√(n(‖A‖_F² + ‖B‖_F²)) · ‖X‖_F)`, computed in HODLR
/// arithmetic.
pub fn residual_sylvester(a: &HodlrMatrix, b: &HodlrMatrix, c: &HodlrMatrix, x: &HodlrMatrix) -> Result<f64> {
    let xf = x.frobenius();
    if xf == 0.0 {
        return Err(Error::UndefinedResidual("solution is zero".into()));
    }
    let num = sylvester_residual_matrix(a, b, c, x)?.frobenius();
    let n = a.rows() as f64;
    let (af, bf) = (a.frobenius(), b.frobenius());
    Ok(num / ((n * (af * af + bf * bf)).sqrt() * xf))
}

fn sylvester_residual_matrix(a: &HodlrMatrix, b: &HodlrMatrix, c: &HodlrMatrix, x: &HodlrMatrix) -> Result<HodlrMatrix> {
    let t = residual_truncation();
    let ax = a.multiply(x, &t)?;
    let xb = x.multiply(b, &t)?;
    ax.add(&xb, &t)?.sub(c, &t)
}

/// Value of the generalized residual metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedResidual {
    pub value: f64,
    /// The denominator bound `√(2n)‖A‖_F − Σ‖M_j‖_F²` was not positive;
    /// `value` is then `‖R‖_F / ‖X‖_F`, without normalisation by the operator norm.
    pub unnormalized: bool,
}

/// `‖AX + XA + Σ M_j X M_jᵀ − C‖_F / ((√(2n)‖A‖_F − Σ‖M_j‖_F²) ‖X‖_F)`.
pub fn residual_generalized(prob: &GeneralizedProblem, x: &HodlrMatrix) -> Result<GeneralizedResidual> {
    let xf = x.frobenius();
    if xf == 0.0 {
        return Err(Error::UndefinedResidual("solution is zero".into()));
    }
    let t = residual_truncation();
    let a = &prob.a;
    let mut r = sylvester_residual_matrix(a, a, &prob.c, x)?;
    let mut m_norms = 0.0;
    for term in &prob.terms {
        match term {
            CorrectionTerm::LowRank { u, v } => {
                // U (Vᵀ X V) Uᵀ
                let xv = x.mul_dense(v);
                let core = linalg::matmul_tn(v, &xv);
                r.add_lowrank(&linalg::matmul(u, &core), u, &t);
                let lr = crate::hodlr::LowRank::new(u.clone(), v.clone());
                m_norms += lr.frobenius_sq();
            }
            CorrectionTerm::Quasiseparable(m) => {
                let mxm = m.multiply(x, &t)?.multiply(&m.transpose(), &t)?;
                r = r.add(&mxm, &t)?;
                m_norms += m.frobenius().powi(2);
            }
        }
    }
    let num = r.frobenius();
    let n = a.rows() as f64;
    let denom = (2.0 * n).sqrt() * a.frobenius() - m_norms;
    Ok(if denom > 0.0 {
        GeneralizedResidual { value: num / (denom * xf), unnormalized: false }
    } else {
        GeneralizedResidual { value: num / xf, unnormalized: true }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodlr::HodlrConfig;
    use crate::linalg::{gauss_legendre, tridiagonal, two_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `K(λ)` by Gauss–Legendre on the substitution `t = sin φ`, which removes
    /// the endpoint singularity of the standard integrand.
    fn k_quadrature(lambda: f64) -> f64 {
        let (x, w) = gauss_legendre(64).unwrap();
        x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| {
                let phi = 0.25 * PI * (xi + 1.0);
                0.25 * PI * wi / (1.0 - (lambda * phi.sin()).powi(2)).sqrt()
            })
            .sum()
    }

    #[test]
    fn elliptic_k_values() {
        assert!((elliptic_k(1e-12).unwrap() - PI / 2.0).abs() < 1e-14);
        let k = elliptic_k(0.5f64.sqrt()).unwrap();
        assert!((k - 1.854_074_677_301_37).abs() < 1e-13);
        for lambda in [0.1, 0.3, 0.7, 0.9, 0.99] {
            let (agm, quad) = (elliptic_k(lambda).unwrap(), k_quadrature(lambda));
            assert!((agm - quad).abs() < 1e-14 * quad, "{lambda}: {agm} vs {quad}");
        }
        let grid: Vec<f64> = (1..100).map(|i| elliptic_k(i as f64 / 100.0).unwrap()).collect();
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        for bad in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            assert!(elliptic_k(bad).is_err());
        }
    }

    #[test]
    fn grotzsch_identities() {
        assert!((grotzsch_mu(0.5f64.sqrt()).unwrap() - PI / 2.0).abs() < 1e-14);
        for i in 1..50 {
            let l = i as f64 / 50.0;
            let prod = grotzsch_mu(l).unwrap() * grotzsch_mu((1.0 - l * l).sqrt()).unwrap();
            assert!((prod - PI * PI / 4.0).abs() < 1e-12);
        }
        let mu = grotzsch_mu(0.1).unwrap();
        let quad = 0.5 * PI * k_quadrature(0.99f64.sqrt()) / k_quadrature(0.1);
        assert!((mu - quad).abs() < 1e-12 * quad);
        let grid: Vec<f64> = (1..100).map(|i| grotzsch_mu(i as f64 / 100.0).unwrap()).collect();
        assert!(grid.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn zolotarev_values() {
        let (e, w) = zolotarev_rho(SpectralInterval::new(1.0, 100.0).unwrap());
        assert!((w - (PI * PI / (2.0 * 400f64.ln())).exp()).abs() < 1e-14);
        assert!((w - 2.28).abs() < 5e-3);
        assert!(e > w);
        for ratio in [2.0, 10.0, 100.0, 1e4] {
            let (e, w) = zolotarev_rho(SpectralInterval::new(1.0, ratio).unwrap());
            assert!(e >= w, "b/a = {ratio}");
        }
        let (e, _) = zolotarev_rho(SpectralInterval::new(3.0, 3.0).unwrap());
        assert!(e.is_infinite());
        assert!(SpectralInterval::new(0.0, 1.0).is_err());
        assert!(SpectralInterval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn decay_bound_rank_formulas() {
        let iv = SpectralInterval::new(1.0, 10.0).unwrap();
        assert_eq!(offdiag_decay_bound(1, 1, 1, &Structure::General, iv).k, 3);
        assert_eq!(offdiag_decay_bound(1, 1, 3, &Structure::Banded, iv).k, 3);
        assert_eq!(offdiag_decay_bound(1, 1, 1, &Structure::Generalized(vec![2]), iv).k, 5);
        let b = offdiag_decay_bound(1, 1, 0, &Structure::General, iv);
        assert!((1..10).all(|l| b.predicted(l) < b.predicted(l - 1)));
        assert_eq!(b.violations(&[1.0, 0.0, 0.0], 0.0), Vec::<usize>::new());
        assert_eq!(b.violations(&[1.0, 0.5, 0.9], 0.0), vec![1]);
    }

    #[test]
    fn eps_qs_rank_examples() {
        let d = DenseMatrix::from_diagonal(&nalgebra::DVector::from_fn(40, |i, _| i as f64 + 1.0));
        assert_eq!(eps_qs_rank(&d, 1e-3).unwrap(), 0);
        assert_eq!(eps_qs_rank(&tridiagonal(50, -1.0, 2.0, -1.0), 0.0).unwrap(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = DenseMatrix::from_fn(40, 40, |_, _| rng.random_range(-1.0..1.0));
        assert_eq!(eps_qs_rank(&r, 1e-12).unwrap(), 20);
    }

    #[test]
    fn blockwise_truncation_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 128;
        let a = DenseMatrix::from_fn(n, n, |i, j| rng.random_range(-1.0..1.0) / (1.0 + (i as f64 - j as f64).powi(2)));
        for eps in [1e-4, 1e-8] {
            let t = truncate_blockwise(&a, eps, 1).unwrap();
            let err = two_norm(&(t.to_dense() - &a));
            assert!(err <= 2.0 * (n as f64).sqrt() * eps, "{eps}: {err:e}");
        }
    }

    #[test]
    fn residual_examples() {
        let cfg = HodlrConfig { block_size: 16, ..HodlrConfig::default() };
        let id = HodlrMatrix::identity(64, 16);
        let c = id.scaled(2.0);
        assert!(residual_sylvester(&id, &id, &c, &id).unwrap() < 1e-16);
        assert!(matches!(
            residual_sylvester(&id, &id, &c, &id.zeros_like()),
            Err(Error::UndefinedResidual(_))
        ));
        let t = tridiagonal(64, -1.0, 2.0, -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cd = DenseMatrix::from_fn(64, 64, |_, _| rng.random_range(-1.0..1.0));
        let x = crate::solvers::dense_sylvester_oracle(&t, &t, &cd).unwrap();
        let h = |m: &DenseMatrix| HodlrMatrix::from_dense(m, &cfg).unwrap();
        let (th, ch) = (h(&t), h(&cd));
        assert!(residual_sylvester(&th, &th, &ch, &h(&x)).unwrap() < 1e-12);
        let p = DenseMatrix::from_fn(64, 64, |_, _| rng.random_range(-1.0..1.0));
        let xp = &x + p * (1e-6 * x.norm() / 64.0);
        let r = residual_sylvester(&th, &th, &ch, &h(&xp)).unwrap();
        assert!((1e-8..=1e-4).contains(&r), "{r:e}");
    }
}
