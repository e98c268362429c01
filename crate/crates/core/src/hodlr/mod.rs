//! Hierarchically off-diagonal low-rank (HODLR) matrices.
//!
//! A square matrix is split as `[A11 A12; A21 A22]` with `n1 = ⌊n/2⌋`; the
//! off-diagonal blocks are stored as [`LowRank`] outer products and the
//! diagonal blocks are split recursively until their size drops to the leaf
//! cutoff `block_size`, where they are kept dense.
//!
//! Arithmetic (`add`, `multiply`, `inverse`, ...) recompresses every
//! off-diagonal block it produces, once, at the point where the block is formed.

mod aca;
mod arith;
mod banded;
mod io;
mod lowrank;

pub use banded::Banded;
pub use io::{deserialize, serialize};
pub use lowrank::{LowRank, Truncation, TruncationMode};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, DenseMatrix};
use crate::{Error, Result};

/// Options mirroring the toolbox: relative truncation threshold, leaf size and
/// an optional hard cap on off-diagonal ranks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HodlrConfig {
    pub threshold: f64,
    pub block_size: usize,
    pub max_rank: Option<usize>,
}

impl Default for HodlrConfig {
    fn default() -> Self {
        HodlrConfig { threshold: 1e-12, block_size: 256, max_rank: None }
    }
}

impl HodlrConfig {
    pub fn new(threshold: f64, block_size: usize) -> Result<Self> {
        let cfg = HodlrConfig { threshold, block_size, max_rank: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0) {
            return Err(Error::invalid(format!("threshold must be >= 0, got {}", self.threshold)));
        }
        if self.block_size < 2 {
            return Err(Error::invalid(format!("block size must be >= 2, got {}", self.block_size)));
        }
        Ok(())
    }

    /// Relative truncation at `threshold`.
    pub fn truncation(&self) -> Truncation {
        Truncation {
            tol: self.threshold,
            mode: TruncationMode::Relative,
            max_rank: self.max_rank.unwrap_or(usize::MAX),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HodlrMatrix {
    Leaf(DenseMatrix),
    Node(Box<HodlrNode>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HodlrNode {
    pub a11: HodlrMatrix,
    pub a12: LowRank,
    pub a21: LowRank,
    pub a22: HodlrMatrix,
}

pub(crate) fn split(n: usize) -> (usize, usize) {
    (n / 2, n - n / 2)
}

impl HodlrMatrix {
    pub fn node(a11: HodlrMatrix, a12: LowRank, a21: LowRank, a22: HodlrMatrix) -> Self {
        debug_assert_eq!(a12.rows(), a11.rows());
        debug_assert_eq!(a12.cols(), a22.rows());
        debug_assert_eq!(a21.rows(), a22.rows());
        debug_assert_eq!(a21.cols(), a11.rows());
        HodlrMatrix::Node(Box::new(HodlrNode { a11, a12, a21, a22 }))
    }

    pub fn rows(&self) -> usize {
        match self {
            HodlrMatrix::Leaf(d) => d.nrows(),
            HodlrMatrix::Node(nd) => nd.a11.rows() + nd.a22.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        self.rows()
    }

    pub fn depth(&self) -> usize {
        match self {
            HodlrMatrix::Leaf(_) => 0,
            HodlrMatrix::Node(nd) => 1 + nd.a11.depth().max(nd.a22.depth()),
        }
    }

    /// True when both trees have identical block partitions.
    pub fn same_shape(&self, other: &HodlrMatrix) -> bool {
        match (self, other) {
            (HodlrMatrix::Leaf(a), HodlrMatrix::Leaf(b)) => a.shape() == b.shape(),
            (HodlrMatrix::Node(a), HodlrMatrix::Node(b)) => {
                a.a11.same_shape(&b.a11) && a.a22.same_shape(&b.a22)
            }
            _ => false,
        }
    }

    pub(crate) fn check_same_shape(&self, other: &HodlrMatrix, op: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{op}: tree shapes differ ({}x{} vs {}x{})",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )))
        }
    }

    /// Zero matrix with the standard partition of an `n x n` matrix.
    pub fn zeros(n: usize, block_size: usize) -> Self {
        if n <= block_size {
            return HodlrMatrix::Leaf(DenseMatrix::zeros(n, n));
        }
        let (n1, n2) = split(n);
        HodlrMatrix::node(
            HodlrMatrix::zeros(n1, block_size),
            LowRank::zeros(n1, n2),
            LowRank::zeros(n2, n1),
            HodlrMatrix::zeros(n2, block_size),
        )
    }

    /// Zero matrix with the same partition as `self`.
    pub fn zeros_like(&self) -> Self {
        match self {
            HodlrMatrix::Leaf(d) => HodlrMatrix::Leaf(DenseMatrix::zeros(d.nrows(), d.ncols())),
            HodlrMatrix::Node(nd) => HodlrMatrix::node(
                nd.a11.zeros_like(),
                LowRank::zeros(nd.a12.rows(), nd.a12.cols()),
                LowRank::zeros(nd.a21.rows(), nd.a21.cols()),
                nd.a22.zeros_like(),
            ),
        }
    }

    pub fn identity(n: usize, block_size: usize) -> Self {
        let mut h = HodlrMatrix::zeros(n, block_size);
        h.shift_diagonal(1.0);
        h
    }

    /// Identity with the same partition as `self`.
    pub fn identity_like(&self) -> Self {
        let mut h = self.zeros_like();
        h.shift_diagonal(1.0);
        h
    }

    pub fn from_diagonal(d: &[f64], block_size: usize) -> Self {
        let mut h = HodlrMatrix::zeros(d.len(), block_size);
        h.visit_leaves_mut(&mut |offset, leaf| {
            for i in 0..leaf.nrows() {
                leaf[(i, i)] = d[offset + i];
            }
        });
        h
    }

    /// Builds the HODLR approximation of a dense square matrix, compressing
    /// each off-diagonal block by a truncated SVD relative to its own 2-norm.
    pub fn from_dense(a: &DenseMatrix, cfg: &HodlrConfig) -> Result<Self> {
        cfg.validate()?;
        if a.nrows() != a.ncols() {
            return Err(Error::invalid(format!("from_dense: {}x{} is not square", a.nrows(), a.ncols())));
        }
        linalg::ensure_finite(a, "matrix")?;
        Ok(Self::from_dense_with(a, cfg.block_size, &cfg.truncation()))
    }

    pub(crate) fn from_dense_with(a: &DenseMatrix, block_size: usize, trunc: &Truncation) -> Self {
        let n = a.nrows();
        if n <= block_size {
            return HodlrMatrix::Leaf(a.clone());
        }
        let (n1, n2) = split(n);
        let b12 = a.view((0, 0 + n1), (n1, n2)).into_owned();
        let b21 = a.view((n1, 0), (n2, n1)).into_owned();
        let a21 = lowrank::compress_dense(&b21, trunc);
        let a12 = if b12 == b21.transpose() {
            a21.transpose()
        } else {
            lowrank::compress_dense(&b12, trunc)
        };
        let (a11, a22) = crate::par::join(
            || Self::from_dense_with(&a.view((0, 0), (n1, n1)).into_owned(), block_size, trunc),
            || Self::from_dense_with(&a.view((n1, n1), (n2, n2)).into_owned(), block_size, trunc),
        );
        HodlrMatrix::node(a11, a12, a21, a22)
    }

    /// Exact HODLR form of a banded matrix; off-diagonal ranks never exceed
    /// the bandwidth.
    pub fn from_banded(band: &Banded, cfg: &HodlrConfig) -> Result<Self> {
        cfg.validate()?;
        banded::build(band, cfg.block_size)
    }

    /// Samples `f(x_i, y_j)` in HODLR form; off-diagonal blocks are built by
    /// adaptive cross approximation and recompressed at `cfg.threshold`.
    pub fn from_function<F>(f: F, xs: &[f64], ys: &[f64], cfg: &HodlrConfig) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        cfg.validate()?;
        if xs.len() != ys.len() {
            return Err(Error::invalid(format!(
                "from_function: grids have lengths {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        aca::build(&f, xs, ys, cfg)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.rows();
        let mut out = DenseMatrix::zeros(n, n);
        self.write_dense(&mut out, 0);
        out
    }

    fn write_dense(&self, out: &mut DenseMatrix, off: usize) {
        match self {
            HodlrMatrix::Leaf(d) => out.view_mut((off, off), d.shape()).copy_from(d),
            HodlrMatrix::Node(nd) => {
                let n1 = nd.a11.rows();
                let n2 = nd.a22.rows();
                nd.a11.write_dense(out, off);
                nd.a22.write_dense(out, off + n1);
                out.view_mut((off, off + n1), (n1, n2)).copy_from(&nd.a12.to_dense());
                out.view_mut((off + n1, off), (n2, n1)).copy_from(&nd.a21.to_dense());
            }
        }
    }

    /// Calls `f(offset, leaf)` for every diagonal leaf, in order.
    pub(crate) fn visit_leaves_mut(&mut self, f: &mut impl FnMut(usize, &mut DenseMatrix)) {
        fn go(h: &mut HodlrMatrix, off: usize, f: &mut impl FnMut(usize, &mut DenseMatrix)) {
            match h {
                HodlrMatrix::Leaf(d) => f(off, d),
                HodlrMatrix::Node(nd) => {
                    let n1 = nd.a11.rows();
                    go(&mut nd.a11, off, f);
                    go(&mut nd.a22, off + n1, f);
                }
            }
        }
        go(self, 0, f)
    }

    pub(crate) fn visit_leaves(&self, f: &mut impl FnMut(usize, &DenseMatrix)) {
        fn go(h: &HodlrMatrix, off: usize, f: &mut impl FnMut(usize, &DenseMatrix)) {
            match h {
                HodlrMatrix::Leaf(d) => f(off, d),
                HodlrMatrix::Node(nd) => {
                    go(&nd.a11, off, f);
                    go(&nd.a22, off + nd.a11.rows(), f);
                }
            }
        }
        go(self, 0, f)
    }

    fn visit_offdiag(&self, f: &mut impl FnMut(&LowRank)) {
        if let HodlrMatrix::Node(nd) = self {
            f(&nd.a12);
            f(&nd.a21);
            nd.a11.visit_offdiag(f);
            nd.a22.visit_offdiag(f);
        }
    }

    /// `self += alpha I`.
    pub fn shift_diagonal(&mut self, alpha: f64) {
        self.visit_leaves_mut(&mut |_, leaf| {
            for i in 0..leaf.nrows() {
                leaf[(i, i)] += alpha;
            }
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows()];
        self.visit_leaves(&mut |off, leaf| {
            for i in 0..leaf.nrows() {
                d[off + i] = leaf[(i, i)];
            }
        });
        d
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn scale_mut(&mut self, alpha: f64) {
        match self {
            HodlrMatrix::Leaf(d) => d.scale_mut(alpha),
            HodlrMatrix::Node(nd) => {
                nd.a12.u.scale_mut(alpha);
                nd.a21.u.scale_mut(alpha);
                nd.a11.scale_mut(alpha);
                nd.a22.scale_mut(alpha);
            }
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut h = self.clone();
        h.scale_mut(alpha);
        h
    }

    pub fn transpose(&self) -> Self {
        match self {
            HodlrMatrix::Leaf(d) => HodlrMatrix::Leaf(d.transpose()),
            HodlrMatrix::Node(nd) => HodlrMatrix::node(
                nd.a11.transpose(),
                nd.a21.transpose(),
                nd.a12.transpose(),
                nd.a22.transpose(),
            ),
        }
    }

    /// Largest off-diagonal rank in the tree.
    pub fn hodlr_rank(&self) -> usize {
        let mut k = 0;
        self.visit_offdiag(&mut |lr| k = k.max(lr.rank()));
        k
    }

    /// Storage footprint of leaves and factors in bytes.
    pub fn bytes(&self) -> usize {
        let mut b = 0;
        self.visit_leaves(&mut |_, leaf| b += 8 * leaf.len());
        self.visit_offdiag(&mut |lr| b += lr.bytes());
        b
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        self.visit_leaves(&mut |_, leaf| s += leaf.norm_squared());
        self.visit_offdiag(&mut |lr| s += lr.frobenius_sq());
        s.sqrt()
    }

    /// Spectral norm estimate from a Lanczos run on `HᵀH` with a fixed seed.
    pub fn two_norm_estimate(&self) -> f64 {
        let n = self.rows();
        if n == 0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let start = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let apply = |x: &DVector<f64>| self.tmatvec(&self.matvec(x));
        lanczos_max(n, start, apply).max(0.0).sqrt()
    }

    /// `(‖H‖_F, estimate of ‖H‖₂)`.
    pub fn norms(&self) -> (f64, f64) {
        (self.frobenius(), self.two_norm_estimate())
    }

    /// Exact symmetry of the stored representation: symmetric leaves and
    /// `A12` stored as the transpose of `A21` at every node.
    pub fn is_structurally_symmetric(&self) -> bool {
        match self {
            HodlrMatrix::Leaf(d) => *d == d.transpose(),
            HodlrMatrix::Node(nd) => {
                nd.a12.is_transpose_of(&nd.a21)
                    && nd.a11.is_structurally_symmetric()
                    && nd.a22.is_structurally_symmetric()
            }
        }
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
fn lanczos_max(n: usize, start: DVector<f64>, apply: impl Fn(&DVector<f64>) -> DVector<f64>) -> f64 {
    let steps = n.min(40);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let norm = start.norm();
    if norm == 0.0 {
        return 0.0;
    }
    basis.push(start / norm);
    for j in 0..steps {
        let mut w = apply(&basis[j]);
        let a = w.dot(&basis[j]);
        alpha.push(a);
        // full reorthogonalisation, twice
        for _ in 0..2 {
            for q in &basis {
                let c = w.dot(q);
                w.axpy(-c, q, 1.0);
            }
        }
        let b = w.norm();
        if j + 1 == steps || b <= 1e-13 * alpha.iter().fold(0.0f64, |m, x| m.max(x.abs())) {
            break;
        }
        beta.push(b);
        basis.push(w / b);
    }
    let k = alpha.len();
    let t = DenseMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    linalg::sym_eig(&t).map(|(l, _)| *l.last().unwrap()).unwrap_or(0.0)
}
