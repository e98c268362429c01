use nalgebra::DVector;

use super::lowrank::hcat;
use super::{HodlrMatrix, LowRank, Truncation};
use crate::linalg::{self, DenseMatrix};
use crate::par;
use crate::{Error, Result};

fn lr_apply(lr: &LowRank, x: &DenseMatrix) -> DenseMatrix {
    if lr.rank() == 0 {
        return DenseMatrix::zeros(lr.rows(), x.ncols());
    }
    linalg::matmul(&lr.u, &linalg::matmul_tn(&lr.v, x))
}

fn lr_apply_t(lr: &LowRank, x: &DenseMatrix) -> DenseMatrix {
    if lr.rank() == 0 {
        return DenseMatrix::zeros(lr.cols(), x.ncols());
    }
    linalg::matmul(&lr.v, &linalg::matmul_tn(&lr.u, x))
}

/// Sum of two low-rank blocks, recompressed relative to the larger of the
/// result and the operands, so that `H + (-H)` truncates to rank zero.
fn sum_offdiag(a: &LowRank, b: &LowRank, trunc: &Truncation) -> LowRank {
    if a.rank() == 0 {
        return b.compress(trunc);
    }
    if b.rank() == 0 {
        return a.compress(trunc);
    }
    let scale = a.norm_lower_bound().max(b.norm_lower_bound());
    a.concat(b).compress_scaled(trunc, scale)
}

impl HodlrMatrix {
    /// `H x`.
    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let xm = DenseMatrix::from_column_slice(x.len(), 1, x.as_slice());
        DVector::from_column_slice(self.mul_dense(&xm).as_slice())
    }

    /// `Hᵀ x`.
    pub fn tmatvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let xm = DenseMatrix::from_column_slice(x.len(), 1, x.as_slice());
        DVector::from_column_slice(self.tmul_dense(&xm).as_slice())
    }

    /// `H X` for a dense block of columns `X`.
    pub fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.nrows(), self.cols(), "mul_dense: dimension mismatch");
        match self {
            HodlrMatrix::Leaf(d) => linalg::matmul(d, x),
            HodlrMatrix::Node(nd) => {
                let n1 = nd.a11.rows();
                let n2 = nd.a22.rows();
                let x1 = x.rows(0, n1).into_owned();
                let x2 = x.rows(n1, n2).into_owned();
                let (top, bottom) = par::join(
                    || nd.a11.mul_dense(&x1) + lr_apply(&nd.a12, &x2),
                    || lr_apply(&nd.a21, &x1) + nd.a22.mul_dense(&x2),
                );
                stack(&top, &bottom)
            }
        }
    }

    /// `Hᵀ X`.
    pub fn tmul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.nrows(), self.rows(), "tmul_dense: dimension mismatch");
        match self {
            HodlrMatrix::Leaf(d) => linalg::matmul_tn(d, x),
            HodlrMatrix::Node(nd) => {
                let n1 = nd.a11.rows();
                let n2 = nd.a22.rows();
                let x1 = x.rows(0, n1).into_owned();
                let x2 = x.rows(n1, n2).into_owned();
                let (top, bottom) = par::join(
                    || nd.a11.tmul_dense(&x1) + lr_apply_t(&nd.a21, &x2),
                    || lr_apply_t(&nd.a12, &x1) + nd.a22.tmul_dense(&x2),
                );
                stack(&top, &bottom)
            }
        }
    }

    /// `self + other`, recompressed blockwise.
    pub fn add(&self, other: &HodlrMatrix, trunc: &Truncation) -> Result<HodlrMatrix> {
        self.check_same_shape(other, "add")?;
        Ok(self.add_unchecked(other, 1.0, trunc))
    }

    /// `self + beta * other`, recompressed blockwise.
    pub fn add_scaled(&self, beta: f64, other: &HodlrMatrix, trunc: &Truncation) -> Result<HodlrMatrix> {
        self.check_same_shape(other, "add")?;
        Ok(self.add_unchecked(other, beta, trunc))
    }

    /// `self - other`.
    pub fn sub(&self, other: &HodlrMatrix, trunc: &Truncation) -> Result<HodlrMatrix> {
        self.add_scaled(-1.0, other, trunc)
    }

    fn add_unchecked(&self, other: &HodlrMatrix, beta: f64, trunc: &Truncation) -> HodlrMatrix {
        match (self, other) {
            (HodlrMatrix::Leaf(a), HodlrMatrix::Leaf(b)) => {
                flops::add_elementwise(a.len());
                HodlrMatrix::Leaf(a + b * beta)
            }
            (HodlrMatrix::Node(a), HodlrMatrix::Node(b)) => {
                let sym = a.a12.is_transpose_of(&a.a21) && b.a12.is_transpose_of(&b.a21);
                let a21 = sum_offdiag(&a.a21, &b.a21.scaled(beta), trunc);
                let a12 = if sym {
                    a21.transpose()
                } else {
                    sum_offdiag(&a.a12, &b.a12.scaled(beta), trunc)
                };
                let (a11, a22) = par::join(
                    || a.a11.add_unchecked(&b.a11, beta, trunc),
                    || a.a22.add_unchecked(&b.a22, beta, trunc),
                );
                HodlrMatrix::node(a11, a12, a21, a22)
            }
            _ => unreachable!("shapes checked by caller"),
        }
    }

    /// `self += U Vᵀ`, recompressing each touched off-diagonal block.
    pub fn add_lowrank(&mut self, u: &DenseMatrix, v: &DenseMatrix, trunc: &Truncation) {
        assert_eq!(u.nrows(), self.rows());
        assert_eq!(v.nrows(), self.cols());
        if u.ncols() == 0 {
            return;
        }
        match self {
            HodlrMatrix::Leaf(d) => linalg::gemm_acc(d, 1.0, u, &v.transpose()),
            HodlrMatrix::Node(nd) => {
                let n1 = nd.a11.rows();
                let n2 = nd.a22.rows();
                let u1 = u.rows(0, n1).into_owned();
                let u2 = u.rows(n1, n2).into_owned();
                let v1 = v.rows(0, n1).into_owned();
                let v2 = v.rows(n1, n2).into_owned();
                let sym_before = nd.a12.is_transpose_of(&nd.a21);
                let sym_update = u == v;
                nd.a21 = sum_offdiag(&nd.a21, &LowRank::new(u2.clone(), v1.clone()), trunc);
                nd.a12 = if sym_before && sym_update {
                    nd.a21.transpose()
                } else {
                    sum_offdiag(&nd.a12, &LowRank::new(u1.clone(), v2.clone()), trunc)
                };
                let (a11, a22) = (&mut nd.a11, &mut nd.a22);
                par::join(|| a11.add_lowrank(&u1, &v1, trunc), || a22.add_lowrank(&u2, &v2, trunc));
            }
        }
    }

    /// `self * other` in HODLR arithmetic.
    pub fn multiply(&self, other: &HodlrMatrix, trunc: &Truncation) -> Result<HodlrMatrix> {
        self.check_same_shape(other, "multiply")?;
        Ok(self.mul_unchecked(other, trunc))
    }

    fn mul_unchecked(&self, other: &HodlrMatrix, trunc: &Truncation) -> HodlrMatrix {
        match (self, other) {
            (HodlrMatrix::Leaf(a), HodlrMatrix::Leaf(b)) => HodlrMatrix::Leaf(linalg::matmul(a, b)),
            (HodlrMatrix::Node(a), HodlrMatrix::Node(b)) => {
                let ((c11, c22), (c12, c21)) = par::join(
                    || {
                        par::join(
                            || {
                                let mut c = a.a11.mul_unchecked(&b.a11, trunc);
                                let (u, v) = lr_times_lr(&a.a12, &b.a21);
                                c.add_lowrank(&u, &v, trunc);
                                c
                            },
                            || {
                                let mut c = a.a22.mul_unchecked(&b.a22, trunc);
                                let (u, v) = lr_times_lr(&a.a21, &b.a12);
                                c.add_lowrank(&u, &v, trunc);
                                c
                            },
                        )
                    },
                    || {
                        par::join(
                            || {
                                // A11 B12 + A12 B22
                                let left = LowRank::new(a.a11.mul_dense(&b.a12.u), b.a12.v.clone());
                                let right = LowRank::new(a.a12.u.clone(), b.a22.tmul_dense(&a.a12.v));
                                sum_offdiag(&left, &right, trunc)
                            },
                            || {
                                // A21 B11 + A22 B21
                                let left = LowRank::new(a.a21.u.clone(), b.a11.tmul_dense(&a.a21.v));
                                let right = LowRank::new(a.a22.mul_dense(&b.a21.u), b.a21.v.clone());
                                sum_offdiag(&left, &right, trunc)
                            },
                        )
                    },
                );
                HodlrMatrix::node(c11, c12, c21, c22)
            }
            _ => unreachable!("shapes checked by caller"),
        }
    }

    /// Inverse by recursive block elimination with a low-rank Schur update.
    pub fn inverse(&self, trunc: &Truncation) -> Result<HodlrMatrix> {
        match self {
            HodlrMatrix::Leaf(d) => Ok(HodlrMatrix::Leaf(linalg::inverse(d)?)),
            HodlrMatrix::Node(nd) => {
                let n1 = nd.a11.rows();
                let x11 = nd.a11.inverse(trunc).map_err(|e| offset_pivot(e, 0))?;
                let (u1, v1) = (&nd.a12.u, &nd.a12.v);
                let (u2, v2) = (&nd.a21.u, &nd.a21.v);
                // W = X11 U1, S = A22 - U2 (V2ᵀ W) V1ᵀ
                let w = x11.mul_dense(u1);
                let mut s = nd.a22.clone();
                if u1.ncols() > 0 && u2.ncols() > 0 {
                    let core = linalg::matmul_tn(v2, &w);
                    let upd = linalg::matmul(u2, &core) * -1.0;
                    s.add_lowrank(&upd, v1, trunc);
                }
                let x22 = s.inverse(trunc).map_err(|e| offset_pivot(e, n1))?;
                let p = x22.mul_dense(u2);
                let q = x11.tmul_dense(v2);
                let r = x22.tmul_dense(v1);
                let mut x11 = x11;
                if u1.ncols() > 0 && u2.ncols() > 0 {
                    let core2 = linalg::matmul_tn(v1, &p);
                    let upd = linalg::matmul(&w, &core2);
                    x11.add_lowrank(&upd, &q, trunc);
                }
                let x12 = LowRank::new(w * -1.0, r).compress(trunc);
                let x21 = LowRank::new(p * -1.0, q).compress(trunc);
                Ok(HodlrMatrix::node(x11, x12, x21, x22))
            }
        }
    }

    /// Solves `H X = B` for a dense right-hand side by block Gaussian elimination.
    pub fn solve_dense(&self, b: &DenseMatrix, trunc: &Truncation) -> Result<DenseMatrix> {
        if b.nrows() != self.rows() {
            return Err(Error::invalid(format!(
                "solve: right-hand side has {} rows, expected {}",
                b.nrows(),
                self.rows()
            )));
        }
        self.solve_rec(b, trunc)
    }

    fn solve_rec(&self, b: &DenseMatrix, trunc: &Truncation) -> Result<DenseMatrix> {
        match self {
            HodlrMatrix::Leaf(d) => linalg::solve_dense(d, b),
            HodlrMatrix::Node(nd) => {
                let n1 = nd.a11.rows();
                let n2 = nd.a22.rows();
                let (u1, v1) = (&nd.a12.u, &nd.a12.v);
                let (u2, v2) = (&nd.a21.u, &nd.a21.v);
                let r = b.ncols();
                let b1 = b.rows(0, n1).into_owned();
                let b2 = b.rows(n1, n2).into_owned();
                let y = nd.a11.solve_rec(&hcat(&b1, u1), trunc).map_err(|e| offset_pivot(e, 0))?;
                let yb = y.columns(0, r).into_owned();
                let yu = y.columns(r, u1.ncols()).into_owned();
                let mut s = nd.a22.clone();
                let mut rhs2 = b2;
                if u2.ncols() > 0 {
                    if u1.ncols() > 0 {
                        let core = linalg::matmul_tn(v2, &yu);
                        s.add_lowrank(&(linalg::matmul(u2, &core) * -1.0), v1, trunc);
                    }
                    linalg::gemm_acc(&mut rhs2, -1.0, u2, &linalg::matmul_tn(v2, &yb));
                }
                let x2 = s.solve_rec(&rhs2, trunc).map_err(|e| offset_pivot(e, n1))?;
                let mut x1 = yb;
                if u1.ncols() > 0 {
                    linalg::gemm_acc(&mut x1, -1.0, &yu, &linalg::matmul_tn(v1, &x2));
                }
                Ok(stack(&x1, &x2))
            }
        }
    }

    /// Solves `H X = B` for a HODLR right-hand side via the HODLR inverse.
    pub fn solve(&self, b: &HodlrMatrix, trunc: &Truncation) -> Result<HodlrMatrix> {
        self.check_same_shape(b, "solve")?;
        self.inverse(trunc)?.multiply(b, trunc)
    }

    /// Frobenius inner product `trace(selfᵀ other)`, evaluated blockwise.
    pub fn inner(&self, other: &HodlrMatrix) -> Result<f64> {
        self.check_same_shape(other, "inner")?;
        Ok(self.inner_unchecked(other))
    }

    fn inner_unchecked(&self, other: &HodlrMatrix) -> f64 {
        match (self, other) {
            (HodlrMatrix::Leaf(a), HodlrMatrix::Leaf(b)) => {
                flops::add_elementwise(2 * a.len());
                a.dot(b)
            }
            (HodlrMatrix::Node(a), HodlrMatrix::Node(b)) => {
                lr_inner(&a.a12, &b.a12)
                    + lr_inner(&a.a21, &b.a21)
                    + a.a11.inner_unchecked(&b.a11)
                    + a.a22.inner_unchecked(&b.a22)
            }
            _ => unreachable!("shapes checked by caller"),
        }
    }

    /// `½(H + Hᵀ)` stored symmetrically: leaves are symmetrised and each
    /// `A12` is the transpose of the recompressed `A21`.
    pub fn symmetrized(&self, trunc: &Truncation) -> HodlrMatrix {
        match self {
            HodlrMatrix::Leaf(d) => HodlrMatrix::Leaf((d + d.transpose()) * 0.5),
            HodlrMatrix::Node(nd) => {
                let a21 = if nd.a12.is_transpose_of(&nd.a21) {
                    nd.a21.clone()
                } else {
                    sum_offdiag(&nd.a21.scaled(0.5), &nd.a12.transpose().scaled(0.5), trunc)
                };
                let (a11, a22) = par::join(|| nd.a11.symmetrized(trunc), || nd.a22.symmetrized(trunc));
                HodlrMatrix::node(a11, a21.transpose(), a21, a22)
            }
        }
    }

    /// Recompresses every off-diagonal block with `trunc`.
    pub fn recompress(&self, trunc: &Truncation) -> HodlrMatrix {
        match self {
            HodlrMatrix::Leaf(_) => self.clone(),
            HodlrMatrix::Node(nd) => {
                let a21 = nd.a21.compress(trunc);
                let a12 = if nd.a12.is_transpose_of(&nd.a21) {
                    a21.transpose()
                } else {
                    nd.a12.compress(trunc)
                };
                HodlrMatrix::node(nd.a11.recompress(trunc), a12, a21, nd.a22.recompress(trunc))
            }
        }
    }
}

mod flops {
    pub(super) fn add_elementwise(n: usize) {
        crate::flops::add(n as u64);
    }
}

fn offset_pivot(e: Error, off: usize) -> Error {
    match e {
        Error::Singular { pivot } => Error::Singular { pivot: pivot + off },
        other => other,
    }
}

/// `trace((U_a V_aᵀ)ᵀ U_b V_bᵀ) = Σ (U_aᵀU_b) ∘ (V_aᵀV_b)`.
fn lr_inner(a: &LowRank, b: &LowRank) -> f64 {
    if a.rank() == 0 || b.rank() == 0 {
        return 0.0;
    }
    linalg::matmul_tn(&a.u, &b.u).component_mul(&linalg::matmul_tn(&a.v, &b.v)).sum()
}

/// `(U_a V_aᵀ)(U_b V_bᵀ) = U_a (V_aᵀ U_b) V_bᵀ` as a factor pair.
fn lr_times_lr(a: &LowRank, b: &LowRank) -> (DenseMatrix, DenseMatrix) {
    if a.rank() == 0 || b.rank() == 0 {
        return (DenseMatrix::zeros(a.rows(), 0), DenseMatrix::zeros(b.cols(), 0));
    }
    let core = linalg::matmul_tn(&a.v, &b.u);
    if a.rank() <= b.rank() {
        (a.u.clone(), linalg::matmul_nt(&b.v, &core))
    } else {
        (linalg::matmul(&a.u, &core), b.v.clone())
    }
}

pub(crate) fn stack(top: &DenseMatrix, bottom: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}
