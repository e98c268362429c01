//! Dense linear-algebra kernels.
//!
//! Everything above this module treats dense blocks through these functions so
//! that the flop counter in [`crate::flops`] sees all `O(m^3)` work. Storage is
//! `nalgebra`'s column-major `DMatrix<f64>`.

mod decomp;
mod quadrature;

pub use quadrature::gauss_legendre;

use nalgebra::{DMatrix, DVector};

use crate::flops;
use crate::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Thin singular value decomposition `A ≈ U diag(S) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        matmul_nt(&us, &self.v)
    }
}

pub(crate) fn ensure_finite(a: &DenseMatrix, what: &str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} contains non-finite entries")))
    }
}

/// `A * B`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    debug_assert_eq!(a.ncols(), b.nrows());
    flops::add(2 * (a.nrows() * a.ncols() * b.ncols()) as u64);
    a * b
}

/// `Aᵀ * B`.
pub fn matmul_tn(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    debug_assert_eq!(a.nrows(), b.nrows());
    flops::add(2 * (a.nrows() * a.ncols() * b.ncols()) as u64);
    a.transpose() * b
}

/// `A * Bᵀ`.
pub fn matmul_nt(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    debug_assert_eq!(a.ncols(), b.ncols());
    flops::add(2 * (a.nrows() * a.ncols() * b.nrows()) as u64);
    a * b.transpose()
}

/// `C += alpha * A * B`.
pub fn gemm_acc(c: &mut DenseMatrix, alpha: f64, a: &DenseMatrix, b: &DenseMatrix) {
    flops::add(2 * (a.nrows() * a.ncols() * b.ncols()) as u64);
    c.gemm(alpha, a, b, 1.0);
}

/// `A * x`.
pub fn matvec(a: &DenseMatrix, x: &DVector<f64>) -> DVector<f64> {
    flops::add(2 * (a.nrows() * a.ncols()) as u64);
    a * x
}

/// Frobenius norm.
pub fn frobenius(a: &DenseMatrix) -> f64 {
    a.norm()
}

/// Exact spectral norm through the SVD (for tests and small blocks).
pub fn two_norm(a: &DenseMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    full_svd(a).map(|f| f.s[0]).unwrap_or(f64::NAN)
}

fn svd_flops(m: usize, n: usize) -> u64 {
    let (big, small) = if m >= n { (m, n) } else { (n, m) };
    (4 * big * small * small + 8 * small * small * small) as u64
}

/// Thin QR factorisation of a tall matrix: `A = Q R` with `Q` of size `m x min(m, n)`.
pub fn qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (m, n) = a.shape();
    let k = m.min(n);
    flops::add((2 * m * n * k).saturating_sub(2 * k * k * k / 3) as u64 + (2 * m * k * k) as u64);
    let qr = a.clone().qr();
    (qr.q(), qr.r())
}

/// Singular triplets with `σ_i > tol · σ_max`, at most `max_rank` of them.
///
/// `tol = 0` keeps every nonzero singular value; the zero matrix yields rank 0.
pub fn truncated_svd(a: &DenseMatrix, tol: f64, max_rank: usize) -> Result<SvdResult> {
    if !(tol >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be >= 0, got {tol}")));
    }
    ensure_finite(a, "matrix")?;
    let full = full_svd(a)?;
    let smax = full.s.first().copied().unwrap_or(0.0);
    let keep = full
        .s
        .iter()
        .take(max_rank)
        .take_while(|&&s| s > tol * smax && s > 0.0)
        .count();
    Ok(truncate_to(full, keep))
}

fn truncate_to(full: SvdResult, keep: usize) -> SvdResult {
    SvdResult {
        u: full.u.columns(0, keep).into_owned(),
        s: full.s[..keep].to_vec(),
        v: full.v.columns(0, keep).into_owned(),
    }
}

/// Thin SVD with singular values sorted nonincreasingly.
pub(crate) fn full_svd(a: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(SvdResult {
            u: DenseMatrix::zeros(m, 0),
            s: Vec::new(),
            v: DenseMatrix::zeros(n, 0),
        });
    }
    flops::add(svd_flops(m, n));
    let (u, s, v) = decomp::svd(a)?;
    Ok(SvdResult { u, s: s.into_iter().map(|x| x.max(0.0)).collect(), v })
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve_dense(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid(format!("solve_dense: {}x{} is not square", n, a.ncols())));
    }
    if b.nrows() != n {
        return Err(Error::invalid(format!(
            "solve_dense: right-hand side has {} rows, expected {n}",
            b.nrows()
        )));
    }
    ensure_finite(a, "coefficient matrix")?;
    let lu = lu_checked(a)?;
    flops::add((2 * n * n * b.ncols()) as u64);
    lu.solve(b).ok_or_else(|| Error::Numerical("LU solve failed".into()))
}

/// Dense inverse by LU with partial pivoting.
pub fn inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid(format!("inverse: {}x{} is not square", n, a.ncols())));
    }
    ensure_finite(a, "matrix")?;
    let lu = lu_checked(a)?;
    flops::add((4 * n * n * n / 3) as u64);
    lu.try_inverse().ok_or_else(|| Error::Numerical("LU inverse failed".into()))
}

fn lu_checked(a: &DenseMatrix) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let n = a.nrows();
    flops::add((2 * n * n * n / 3) as u64);
    let lu = a.clone().lu();
    let u = lu.u();
    if let Some(pivot) = (0..n).find(|&i| u[(i, i)] == 0.0 || !u[(i, i)].is_finite()) {
        return Err(Error::Singular { pivot });
    }
    Ok(lu)
}

/// Eigen-decomposition of a symmetric matrix; eigenvalues nondecreasing.
pub fn sym_eig(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid(format!("sym_eig: {}x{} is not square", n, a.ncols())));
    }
    ensure_finite(a, "matrix")?;
    let scale = a.norm();
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::invalid(format!(
            "sym_eig: matrix is not symmetric (max |A - A^T| = {asym:e})"
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }
    flops::add(9 * (n * n * n) as u64);
    decomp::sym_eig(a)
}

/// Symmetric tridiagonal Toeplitz matrix `trid(sub, diag, sup)`.
pub fn tridiagonal(n: usize, sub: f64, diag: f64, sup: f64) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else if i == j + 1 {
            sub
        } else if j == i + 1 {
            sup
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn truncated_svd_threshold_separates_entries() {
        let a = DenseMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-8]));
        let svd = truncated_svd(&a, 1e-4, 2).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.s[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_svd_of_zero_has_rank_zero() {
        for (m, n) in [(3, 5), (7, 2), (4, 4)] {
            let svd = truncated_svd(&DenseMatrix::zeros(m, n), 1e-12, m.min(n)).unwrap();
            assert_eq!(svd.rank(), 0);
            assert_eq!(svd.u.shape(), (m, 0));
        }
    }

    #[test]
    fn truncated_svd_recovers_rank_three_product() {
        let g = random(20, 3, 1);
        let h = random(20, 3, 2);
        let a = &g * h.transpose();
        let svd = truncated_svd(&a, 1e-10, 20).unwrap();
        assert_eq!(svd.rank(), 3);
        let err = (svd.reconstruct() - &a).norm();
        assert!(err <= 1e-9 * two_norm(&a), "err = {err:e}");
        // the discarded tail of the full SVD is what truncation removes
        let full = full_svd(&a).unwrap();
        assert!(full.s[3] <= 1e-10 * full.s[0]);
    }

    #[test]
    fn truncated_svd_rejects_non_finite() {
        let mut a = DenseMatrix::identity(3, 3);
        a[(1, 2)] = f64::NAN;
        assert!(matches!(truncated_svd(&a, 0.0, 3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn truncated_svd_respects_max_rank_and_bound() {
        let a = random(30, 18, 7);
        let svd = truncated_svd(&a, 0.3, 5).unwrap();
        assert!(svd.rank() <= 5);
        let full = full_svd(&a).unwrap();
        let tail = full.s.get(svd.rank()).copied().unwrap_or(0.0);
        let err = two_norm(&(svd.reconstruct() - &a));
        assert!((err - tail).abs() <= 1e-12 * full.s[0]);
    }

    #[test]
    fn svd_factors_are_orthonormal() {
        let a = random(40, 25, 3);
        let svd = truncated_svd(&a, 0.0, 25).unwrap();
        let k = svd.rank();
        let e = matmul_tn(&svd.u, &svd.u) - DenseMatrix::identity(k, k);
        assert!(e.norm() <= 1e-12 * (k as f64).sqrt());
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        assert!((svd.reconstruct() - &a).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn solve_dense_identity_and_diagonal() {
        let b = random(5, 3, 4);
        let x = solve_dense(&DenseMatrix::identity(5, 5), &b).unwrap();
        assert_eq!(x, b);
        let a = DenseMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let x = solve_dense(&a, &DenseMatrix::from_column_slice(2, 1, &[2.0, 4.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn solve_dense_small_residual() {
        let a = random(16, 16, 5) + DenseMatrix::identity(16, 16) * 4.0;
        let b = random(16, 4, 6);
        let x = solve_dense(&a, &b).unwrap();
        assert!((&a * &x - &b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn solve_dense_reports_singular_pivot() {
        let a = DenseMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        match solve_dense(&a, &DenseMatrix::identity(3, 1)) {
            Err(Error::Singular { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn sym_eig_diagonal_and_identity() {
        let (l, q) = sym_eig(&DenseMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]))).unwrap();
        assert_eq!(l, vec![1.0, 3.0]);
        assert_eq!(q[(0, 0)].abs(), 0.0);
        assert_eq!(q[(1, 0)].abs(), 1.0);
        let (l, q) = sym_eig(&DenseMatrix::identity(4, 4)).unwrap();
        assert!(l.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!((q.transpose() * &q - DenseMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn sym_eig_matches_laplacian_closed_form() {
        let n = 50;
        let a = tridiagonal(n, -1.0, 2.0, -1.0);
        let (l, q) = sym_eig(&a).unwrap();
        for (k, &lk) in l.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((lk - exact).abs() < 1e-12, "k = {k}: {lk} vs {exact}");
        }
        let resid = &a * &q - &q * DenseMatrix::from_diagonal(&DVector::from_vec(l));
        assert!(resid.norm() <= 1e-12 * a.norm() * (n as f64).sqrt());
    }

    #[test]
    fn sym_eig_rejects_nonsymmetric() {
        let a = tridiagonal(4, -1.0, 2.0, 1.0);
        assert!(matches!(sym_eig(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn svd_and_eig_accurate_on_larger_rank_deficient() {
        for (m, n) in [(150, 150), (166, 97), (64, 200)] {
            let a = DenseMatrix::from_fn(m, n, |i, j| ((i * 31 + j * 17) % 13) as f64 - 6.0 + (i as f64 * 0.37).sin());
            let f = full_svd(&a).unwrap();
            assert!((f.reconstruct() - &a).norm() < 1e-12 * a.norm());
            assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        }
        let b = random(180, 180, 5);
        let s = &b + b.transpose();
        let (l, q) = sym_eig(&s).unwrap();
        let resid = &s * &q - &q * DenseMatrix::from_diagonal(&DVector::from_vec(l.clone()));
        assert!(resid.norm() < 1e-12 * s.norm());
        assert!((q.transpose() * &q - DenseMatrix::identity(180, 180)).norm() < 1e-12);
        assert!(l.windows(2).all(|w| w[0] <= w[1]));
    }
}
