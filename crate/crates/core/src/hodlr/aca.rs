//! Off-diagonal block construction for sampled bivariate functions by adaptive
//! cross approximation (ACA) with partial pivoting.

use super::lowrank::{compress_dense, Truncation};
use super::{split, HodlrConfig, HodlrMatrix, LowRank};
use crate::linalg::DenseMatrix;
use crate::{par, Result};

/// Blocks with fewer rows or columns than this are sampled densely.
const DENSE_FALLBACK: usize = 64;
/// Iteration cap: twice this expected rank.
const EXPECTED_RANK: usize = 40;

pub(super) fn build<F>(f: &F, xs: &[f64], ys: &[f64], cfg: &HodlrConfig) -> Result<HodlrMatrix>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let value = |i: usize, j: usize| f(xs[i], ys[j]);
    for (i, j) in [(0, 0), (xs.len().saturating_sub(1), 0)] {
        if !xs.is_empty() && !value(i, j).is_finite() {
            return Err(crate::Error::invalid("sampled function is not finite"));
        }
    }
    Ok(build_rec(&value, 0, xs.len(), cfg))
}

fn build_rec<G>(g: &G, off: usize, n: usize, cfg: &HodlrConfig) -> HodlrMatrix
where
    G: Fn(usize, usize) -> f64 + Sync,
{
    if n <= cfg.block_size {
        return HodlrMatrix::Leaf(DenseMatrix::from_fn(n, n, |i, j| g(off + i, off + j)));
    }
    let (n1, n2) = split(n);
    let trunc = cfg.truncation();
    let ((a21, a12), (a11, a22)) = par::join(
        || {
            (
                cross(g, off + n1, n2, off, n1, &trunc),
                cross(g, off, n1, off + n1, n2, &trunc),
            )
        },
        || {
            par::join(
                || build_rec(g, off, n1, cfg),
                || build_rec(g, off + n1, n2, cfg),
            )
        },
    );
    HodlrMatrix::node(a11, a12, a21, a22)
}

/// Compresses the block `g(r0 + i, c0 + j)`, `i < m`, `j < n`.
fn cross<G>(g: &G, r0: usize, m: usize, c0: usize, n: usize, trunc: &Truncation) -> LowRank
where
    G: Fn(usize, usize) -> f64,
{
    let dense = || DenseMatrix::from_fn(m, n, |i, j| g(r0 + i, c0 + j));
    if m.min(n) <= DENSE_FALLBACK {
        return compress_dense(&dense(), trunc);
    }
    match aca(g, r0, m, c0, n, trunc.tol, 2 * EXPECTED_RANK) {
        Some(lr) => lr.compress(trunc),
        None => compress_dense(&dense(), trunc),
    }
}

/// Partial-pivoting ACA. Stops when `‖u_k‖ ‖v_k‖ <= tol ‖S_k‖_F`, where `S_k`
/// is the approximant so far. Returns `None` on stagnation.
pub(super) fn aca<G>(g: &G, r0: usize, m: usize, c0: usize, n: usize, tol: f64, max_iter: usize) -> Option<LowRank>
where
    G: Fn(usize, usize) -> f64,
{
    let mut us: Vec<Vec<f64>> = Vec::new();
    let mut vs: Vec<Vec<f64>> = Vec::new();
    let mut used_rows = vec![false; m];
    let mut frob_sq = 0.0f64;
    let mut pivot_row = 0usize;
    let mut zero_rows = 0usize;
    for _ in 0..max_iter.min(m.min(n)) {
        used_rows[pivot_row] = true;
        let mut row: Vec<f64> = (0..n).map(|j| g(r0 + pivot_row, c0 + j)).collect();
        for (u, v) in us.iter().zip(&vs) {
            let c = u[pivot_row];
            row.iter_mut().zip(v).for_each(|(r, vj)| *r -= c * vj);
        }
        let (jp, &pivot) = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
        if pivot == 0.0 {
            // residual row vanishes: try another row, give up after a few
            zero_rows += 1;
            if zero_rows > 3 {
                return if us.is_empty() { None } else { Some(to_lowrank(&us, &vs, m, n)) };
            }
            pivot_row = used_rows.iter().position(|&u| !u)?;
            continue;
        }
        let v: Vec<f64> = row.iter().map(|r| r / pivot).collect();
        let mut u: Vec<f64> = (0..m).map(|i| g(r0 + i, c0 + jp)).collect();
        for (uk, vk) in us.iter().zip(&vs) {
            let c = vk[jp];
            u.iter_mut().zip(uk).for_each(|(x, ui)| *x -= c * ui);
        }
        let nu = dot(&u, &u);
        let nv = dot(&v, &v);
        let mut cross_terms = 0.0;
        for (uk, vk) in us.iter().zip(&vs) {
            cross_terms += dot(uk, &u) * dot(vk, &v);
        }
        frob_sq += nu * nv + 2.0 * cross_terms;
        let step = (nu * nv).sqrt();
        us.push(u);
        vs.push(v);
        if step <= tol * frob_sq.max(0.0).sqrt() {
            return Some(to_lowrank(&us, &vs, m, n));
        }
        let last = us.last().unwrap();
        pivot_row = (0..m)
            .filter(|&i| !used_rows[i])
            .max_by(|&a, &b| last[a].abs().total_cmp(&last[b].abs()))?;
    }
    None
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_lowrank(us: &[Vec<f64>], vs: &[Vec<f64>], m: usize, n: usize) -> LowRank {
    let k = us.len();
    let u = DenseMatrix::from_fn(m, k, |i, j| us[j][i]);
    let v = DenseMatrix::from_fn(n, k, |i, j| vs[j][i]);
    LowRank::new(u, v)
}
