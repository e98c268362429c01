use crate::linalg::{self, DenseMatrix};

/// How singular values are discarded when a low-rank block is recompressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationMode {
    /// Keep `σ_i > tol · σ_1` of the block being compressed.
    Relative,
    /// Keep `σ_i > tol`.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub tol: f64,
    pub mode: TruncationMode,
    pub max_rank: usize,
}

impl Truncation {
    pub fn relative(tol: f64) -> Self {
        Truncation { tol, mode: TruncationMode::Relative, max_rank: usize::MAX }
    }

    pub fn absolute(tol: f64) -> Self {
        Truncation { tol, mode: TruncationMode::Absolute, max_rank: usize::MAX }
    }

    /// Number of leading singular values (sorted nonincreasingly) to keep.
    pub fn keep(&self, s: &[f64]) -> usize {
        self.keep_scaled(s, 0.0)
    }

    /// Like [`keep`](Self::keep), but in relative mode the reference norm is
    /// `max(σ_1, scale)`, so blocks that cancel against their operands of
    /// size `scale` are truncated relative to those operands.
    pub fn keep_scaled(&self, s: &[f64], scale: f64) -> usize {
        let cut = match self.mode {
            TruncationMode::Relative => self.tol * s.first().copied().unwrap_or(0.0).max(scale),
            TruncationMode::Absolute => self.tol,
        };
        s.iter()
            .take(self.max_rank)
            .take_while(|&&x| x > cut && x > 0.0)
            .count()
    }
}

/// A block stored as the outer product `U Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRank {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

impl LowRank {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Self {
        assert_eq!(u.ncols(), v.ncols(), "factor ranks differ");
        LowRank { u, v }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        LowRank { u: DenseMatrix::zeros(rows, 0), v: DenseMatrix::zeros(cols, 0) }
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        if self.rank() == 0 {
            return DenseMatrix::zeros(self.rows(), self.cols());
        }
        linalg::matmul_nt(&self.u, &self.v)
    }

    pub fn transpose(&self) -> LowRank {
        LowRank { u: self.v.clone(), v: self.u.clone() }
    }

    /// True when `self` is bitwise `other.transpose()`.
    pub fn is_transpose_of(&self, other: &LowRank) -> bool {
        self.u == other.v && self.v == other.u
    }

    pub fn scaled(&self, alpha: f64) -> LowRank {
        LowRank { u: &self.u * alpha, v: self.v.clone() }
    }

    /// `[U₁ U₂][V₁ V₂]ᵀ`, the exact sum without recompression.
    pub fn concat(&self, other: &LowRank) -> LowRank {
        LowRank { u: hcat(&self.u, &other.u), v: hcat(&self.v, &other.v) }
    }

    /// Squared Frobenius norm `trace((UᵀU)(VᵀV))`.
    pub fn frobenius_sq(&self) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        let gu = linalg::matmul_tn(&self.u, &self.u);
        let gv = linalg::matmul_tn(&self.v, &self.v);
        gu.component_mul(&gv).sum().max(0.0)
    }

    pub fn bytes(&self) -> usize {
        8 * (self.u.len() + self.v.len())
    }

    /// A rank-one NaN block: non-finite data propagates instead of being
    /// silently truncated away, so callers that check finiteness see it.
    fn poisoned(m: usize, n: usize) -> LowRank {
        LowRank { u: DenseMatrix::from_element(m, 1, f64::NAN), v: DenseMatrix::from_element(n, 1, f64::NAN) }
    }

    /// Recompresses to the numerical rank prescribed by `trunc`.
    ///
    /// Uses QR of both factors and an SVD of the small core, so the cost is
    /// `O((m + n) k²)` for rank `k`.
    pub fn compress(&self, trunc: &Truncation) -> LowRank {
        self.compress_scaled(trunc, 0.0)
    }

    /// A lower bound on the 2-norm, `‖U Vᵀ‖_F / √k`.
    pub(crate) fn norm_lower_bound(&self) -> f64 {
        if self.rank() == 0 {
            0.0
        } else {
            (self.frobenius_sq() / self.rank() as f64).sqrt()
        }
    }

    /// Recompression with the reference norm floored at `scale`; see
    /// [`Truncation::keep_scaled`].
    pub(crate) fn compress_scaled(&self, trunc: &Truncation, scale: f64) -> LowRank {
        let (m, n, k) = (self.rows(), self.cols(), self.rank());
        if k == 0 {
            return self.clone();
        }
        if k >= m.min(n) {
            return compress_dense_scaled(&self.to_dense(), trunc, scale);
        }
        let (qu, ru) = linalg::qr(&self.u);
        let (qv, rv) = linalg::qr(&self.v);
        let core = linalg::matmul_nt(&ru, &rv);
        let Some(svd) = finite_svd(&core) else {
            return LowRank::poisoned(m, n);
        };
        let keep = trunc.keep_scaled(&svd.s, scale);
        if keep == 0 {
            return LowRank::zeros(m, n);
        }
        let w = svd.u.columns(0, keep).into_owned();
        let z = svd.v.columns(0, keep).into_owned();
        let mut u = linalg::matmul(&qu, &w);
        for (j, s) in svd.s[..keep].iter().enumerate() {
            u.column_mut(j).scale_mut(*s);
        }
        LowRank { u, v: linalg::matmul(&qv, &z) }
    }
}

fn from_svd(u: DenseMatrix, s: &[f64], v: DenseMatrix, trunc: &Truncation, scale: f64) -> LowRank {
    let keep = trunc.keep_scaled(s, scale);
    let mut uk = u.columns(0, keep).into_owned();
    for (j, s) in s[..keep].iter().enumerate() {
        uk.column_mut(j).scale_mut(*s);
    }
    LowRank { u: uk, v: v.columns(0, keep).into_owned() }
}

/// Compresses a dense block directly.
pub(crate) fn compress_dense(a: &DenseMatrix, trunc: &Truncation) -> LowRank {
    compress_dense_scaled(a, trunc, 0.0)
}

fn compress_dense_scaled(a: &DenseMatrix, trunc: &Truncation, scale: f64) -> LowRank {
    if a.iter().all(|&x| x == 0.0) {
        return LowRank::zeros(a.nrows(), a.ncols());
    }
    match finite_svd(a) {
        Some(svd) => from_svd(svd.u, &svd.s, svd.v, trunc, scale),
        None => LowRank::poisoned(a.nrows(), a.ncols()),
    }
}

/// SVD of a finite matrix; `None` for non-finite input or a failed SVD.
fn finite_svd(a: &DenseMatrix) -> Option<linalg::SvdResult> {
    if a.iter().all(|x| x.is_finite()) {
        linalg::full_svd(a).ok()
    } else {
        None
    }
}

pub(crate) fn hcat(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = DenseMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
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
    fn compress_removes_redundant_columns() {
        let u = random(40, 3, 1);
        let v = random(30, 3, 2);
        let lr = LowRank::new(u.clone(), v.clone());
        let doubled = lr.concat(&lr);
        let c = doubled.compress(&Truncation::relative(1e-12));
        assert_eq!(c.rank(), 3);
        let err = (c.to_dense() - doubled.to_dense()).norm();
        assert!(err <= 1e-12 * doubled.to_dense().norm());
    }

    #[test]
    fn compress_absolute_and_max_rank() {
        let lr = LowRank::new(random(20, 6, 3), random(25, 6, 4));
        let all = lr.compress(&Truncation::absolute(0.0));
        assert_eq!(all.rank(), 6);
        let capped = lr.compress(&Truncation { max_rank: 2, ..Truncation::absolute(0.0) });
        assert_eq!(capped.rank(), 2);
        let none = lr.compress(&Truncation::absolute(1e6));
        assert_eq!(none.rank(), 0);
        assert_eq!(none.rows(), 20);
    }

    #[test]
    fn frobenius_from_factors() {
        let lr = LowRank::new(random(15, 4, 5), random(9, 4, 6));
        let dense = lr.to_dense();
        assert!((lr.frobenius_sq().sqrt() - dense.norm()).abs() < 1e-12 * dense.norm());
    }
}
