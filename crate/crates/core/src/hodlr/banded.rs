use super::lowrank::{compress_dense, Truncation};
use super::{split, HodlrMatrix};
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

/// Square band matrix: entries with `|i - j| <= bandwidth`, stored by diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Banded {
    n: usize,
    bandwidth: usize,
    /// Row `i` holds columns `i - bandwidth ..= i + bandwidth`.
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, bandwidth: usize) -> Result<Self> {
        if n > 0 && bandwidth >= n {
            return Err(Error::invalid(format!("bandwidth {bandwidth} must be < n = {n}")));
        }
        Ok(Banded { n, bandwidth, data: vec![0.0; n * (2 * bandwidth + 1)] })
    }

    pub fn from_fn(n: usize, bandwidth: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut b = Self::zeros(n, bandwidth)?;
        for i in 0..n {
            for j in i.saturating_sub(bandwidth)..(i + bandwidth + 1).min(n) {
                b.set(i, j, f(i, j));
            }
        }
        Ok(b)
    }

    /// `trid(sub, diag, sup)`.
    pub fn tridiagonal(n: usize, sub: f64, diag: f64, sup: f64) -> Result<Self> {
        Self::from_fn(n, 1, |i, j| {
            if i == j {
                diag
            } else if i > j {
                sub
            } else {
                sup
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || i.abs_diff(j) > self.bandwidth {
            return None;
        }
        Some(i * (2 * self.bandwidth + 1) + (j + self.bandwidth - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.index(i, j).map_or(0.0, |k| self.data[k])
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self
            .index(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside the band"));
        self.data[k] = value;
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |i, j| self.get(r0 + i, c0 + j))
    }
}

// Rank-revealing cut for the corner blocks: only roundoff-level singular
// values are dropped, so the representation is exact to working precision.
const EXACT: f64 = 1e-14;

pub(super) fn build(band: &Banded, block_size: usize) -> Result<HodlrMatrix> {
    if band.n > 0 && band.bandwidth >= band.n {
        return Err(Error::invalid(format!(
            "bandwidth {} must be < n = {}",
            band.bandwidth, band.n
        )));
    }
    Ok(build_rec(band, 0, band.n, block_size))
}

fn build_rec(band: &Banded, off: usize, n: usize, block_size: usize) -> HodlrMatrix {
    if n <= block_size {
        return HodlrMatrix::Leaf(band.block(off, off, n, n));
    }
    let (n1, n2) = split(n);
    let bw = band.bandwidth;
    let trunc = Truncation::relative(EXACT);
    // Lower block: rows off+n1.., cols ..off+n1; only its top-right bw x bw corner is nonzero.
    let rows = bw.min(n2);
    let cols = bw.min(n1);
    let corner21 = band.block(off + n1, off + n1 - cols, rows, cols);
    let corner12 = band.block(off + n1 - cols, off + n1, cols, rows);
    let embed = |corner: &DenseMatrix, row_start: usize, total_rows: usize, col_start: usize, total_cols: usize| {
        let lr = compress_dense(corner, &trunc);
        let mut u = DenseMatrix::zeros(total_rows, lr.rank());
        u.rows_mut(row_start, corner.nrows()).copy_from(&lr.u);
        let mut v = DenseMatrix::zeros(total_cols, lr.rank());
        v.rows_mut(col_start, corner.ncols()).copy_from(&lr.v);
        super::LowRank::new(u, v)
    };
    let a21 = embed(&corner21, 0, n2, n1 - cols, n1);
    let a12 = if corner12 == corner21.transpose() {
        a21.transpose()
    } else {
        embed(&corner12, n1 - cols, n1, 0, n2)
    };
    HodlrMatrix::node(
        build_rec(band, off, n1, block_size),
        a12,
        a21,
        build_rec(band, off + n1, n2, block_size),
    )
}
