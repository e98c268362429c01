//! SVD and symmetric eigendecomposition, delegated to `faer`.
//!
//! `nalgebra`'s bidiagonal SVD can return wrong factors for rank-deficient
//! input, which is the common case for recompression cores, so both
//! decompositions go through `faer` instead.

use faer::{MatRef, Side};

use super::DenseMatrix;
use crate::{Error, Result};

fn view(a: &DenseMatrix) -> MatRef<'_, f64> {
    MatRef::from_column_major_slice(a.as_slice(), a.nrows(), a.ncols())
}

fn to_dense(m: MatRef<'_, f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `A = U diag(s) Vᵀ` with `s` nonincreasing; returns `(U, s, V)`.
pub(crate) fn svd(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let svd = view(a)
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed to converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let s: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((to_dense(svd.U()), s, to_dense(svd.V())))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix;
/// only the lower triangle is referenced.
pub(crate) fn sym_eig(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let eig = view(a)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = eig.S().column_vector();
    Ok(((0..s.nrows()).map(|i| s[i]).collect(), to_dense(eig.U())))
}
