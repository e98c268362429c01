use super::dense_sylvester_oracle;
use crate::hodlr::{HodlrMatrix, LowRank, Truncation};
use crate::linalg::{self, DenseMatrix};
use crate::{Error, Result};

/// Columns whose norm drops below this fraction of their pre-orthogonalisation
/// norm are treated as linearly dependent and deflated.
const DEFLATION: f64 = 1e-10;

/// Orthonormal basis `W` of an extended Krylov space
/// `span{U, A⁻¹U, AU, A⁻²U, …}` together with `AW` and `T = WᵀAW`.
pub(crate) struct ExtendedKrylov {
    pub w: DenseMatrix,
    pub aw: DenseMatrix,
    pub t: DenseMatrix,
}

/// Appends the columns of `block` to `w` after two rounds of Gram–Schmidt,
/// returning the mask of accepted columns.
fn orthogonalize_into(w: &mut DenseMatrix, block: &DenseMatrix) -> Vec<bool> {
    let mut accepted = Vec::with_capacity(block.ncols());
    for j in 0..block.ncols() {
        let mut c = block.column(j).into_owned();
        let orig = c.norm();
        if orig == 0.0 {
            accepted.push(false);
            continue;
        }
        for _ in 0..2 {
            if w.ncols() > 0 {
                let h = w.tr_mul(&c);
                c -= &*w * h;
            }
        }
        let nrm = c.norm();
        if nrm <= DEFLATION * orig || w.ncols() == w.nrows() {
            accepted.push(false);
            continue;
        }
        let k = w.ncols();
        *w = w.clone().insert_column(k, 0.0);
        w.set_column(k, &(c / nrm));
        accepted.push(true);
    }
    accepted
}

impl ExtendedKrylov {
    /// Grows the space two block directions at a time until `converged(self)` or
    /// the space stops growing. `solve_a` applies `A⁻¹` to a dense block.
    pub fn grow(
        a: &HodlrMatrix,
        solve_a: &dyn Fn(&DenseMatrix) -> Result<DenseMatrix>,
        u: &DenseMatrix,
        mut converged: impl FnMut(&ExtendedKrylov) -> Result<bool>,
    ) -> Result<(ExtendedKrylov, bool)> {
        let n = a.rows();
        let mut ek = ExtendedKrylov { w: DenseMatrix::zeros(n, 0), aw: DenseMatrix::zeros(n, 0), t: DenseMatrix::zeros(0, 0) };
        let mut plus = u.clone();
        let mut minus = solve_a(u)?;
        loop {
            let before = ek.w.ncols();
            let plus_mask = orthogonalize_into(&mut ek.w, &plus);
            orthogonalize_into(&mut ek.w, &minus);
            let added = ek.w.ncols() - before;
            if added == 0 {
                // invariant subspace: the projected solution is exact
                return Ok((ek, true));
            }
            let new = ek.w.columns(before, added).into_owned();
            let a_new = a.mul_dense(&new);
            ek.aw = linalg_hcat(&ek.aw, &a_new);
            let t = linalg::matmul_tn(&ek.w, &ek.aw);
            ek.t = (&t + t.transpose()) * 0.5;
            if converged(&ek)? {
                return Ok((ek, true));
            }
            if ek.w.ncols() >= n {
                return Ok((ek, false));
            }
            let n_plus = plus_mask.iter().filter(|&&m| m).count();
            let new_plus = new.columns(0, n_plus).into_owned();
            let new_minus = new.columns(n_plus, added - n_plus).into_owned();
            plus = a.mul_dense(&new_plus);
            minus = if new_minus.ncols() > 0 { solve_a(&new_minus)? } else { DenseMatrix::zeros(n, 0) };
            if plus.ncols() + minus.ncols() == 0 {
                return Ok((ek, true));
            }
        }
    }

    /// Solves the projected equation `T Y + Y T = (Wᵀf_a)(Wᵀf_b)ᵀ`.
    pub fn project_solve(&self, fa: &DenseMatrix, fb: &DenseMatrix) -> Result<DenseMatrix> {
        let pa = linalg::matmul_tn(&self.w, fa);
        let pb = linalg::matmul_tn(&self.w, fb);
        dense_sylvester_oracle(&self.t, &self.t, &linalg::matmul_nt(&pa, &pb))
    }

    /// `‖A W Y Wᵀ + W Y Wᵀ A − f_a f_bᵀ‖_F`, evaluated from thin factors:
    /// the residual is `P M Qᵀ` with `P = [AW, W, f_a]`, `Q = [W, AW, f_b]`.
    pub fn residual(&self, y: &DenseMatrix, fa: &DenseMatrix, fb: &DenseMatrix) -> f64 {
        let k = self.w.ncols();
        let r = fa.ncols();
        let p = linalg_hcat(&linalg_hcat(&self.aw, &self.w), fa);
        let q = linalg_hcat(&linalg_hcat(&self.w, &self.aw), fb);
        let mut m = DenseMatrix::zeros(2 * k + r, 2 * k + r);
        m.view_mut((0, 0), (k, k)).copy_from(y);
        m.view_mut((k, k), (k, k)).copy_from(y);
        for i in 0..r {
            m[(2 * k + i, 2 * k + i)] = -1.0;
        }
        let (_, rp) = linalg::qr(&p);
        let (_, rq) = linalg::qr(&q);
        (rp * m * rq.transpose()).norm()
    }
}

fn linalg_hcat(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Low-rank solution `Z = (W Y) Wᵀ` of `AZ + ZA = u uᵀ` for SPD `A` and a thin
/// factor `u`, from the extended Krylov space of `(A, u)`.
///
/// Grows the space until `‖AZ + ZA − uuᵀ‖_F ≤ tol ‖uuᵀ‖_F`; the projected
/// equations are solved with [`dense_sylvester_oracle`]. Fails with
/// [`Error::NoConvergence`] if the space fills `ℝⁿ` first.
pub fn ek_lowrank_lyap(a: &HodlrMatrix, u: &DenseMatrix, tol: f64, trunc: &Truncation) -> Result<LowRank> {
    if a.rows() != a.cols() || u.nrows() != a.rows() {
        return Err(Error::invalid("ek_lowrank_lyap: A must be square and conform with u"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("ek_lowrank_lyap: tol must be > 0, got {tol}")));
    }
    linalg::ensure_finite(u, "u")?;
    if u.ncols() == 0 || u.norm() == 0.0 {
        return Ok(LowRank::zeros(a.rows(), a.rows()));
    }
    crate::expm::probe_spd(a)?;
    let rhs = (linalg::matmul_tn(u, u)).norm();
    let solve = |b: &DenseMatrix| a.solve_dense(b, trunc);
    let mut history = Vec::new();
    let mut y = DenseMatrix::zeros(0, 0);
    let (ek, ok) = ExtendedKrylov::grow(a, &solve, u, |ek| {
        y = ek.project_solve(u, u)?;
        let res = ek.residual(&y, u, u) / rhs;
        history.push(res);
        Ok(res <= tol)
    })?;
    if !ok {
        let last = history.last().copied().unwrap_or(f64::NAN);
        return Err(Error::NoConvergence { method: "extended krylov", iterations: history.len(), last, history });
    }
    if y.ncols() != ek.w.ncols() {
        y = ek.project_solve(u, u)?;
    }
    Ok(LowRank::new(linalg::matmul(&ek.w, &y), ek.w))
}
