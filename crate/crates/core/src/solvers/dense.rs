use crate::linalg::{self, DenseMatrix};
use crate::{Error, Result};

/// Dense solution of `AX + XB = C` for symmetric `A`, `B` by diagonalising both:
/// `X = Q_A Ŷ Q_Bᵀ`, `Ŷ_ij = (Q_Aᵀ C Q_B)_ij / (λ_i + μ_j)`.
///
/// Fails with [`Error::SingularPencil`] when some `|λ_i + μ_j|` is at most
/// `1e-14 (‖A‖₂ + ‖B‖₂)`.
pub fn dense_sylvester_oracle(a: &DenseMatrix, b: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, m) = (a.nrows(), b.nrows());
    if a.ncols() != n || b.ncols() != m || c.shape() != (n, m) {
        return Err(Error::invalid(format!(
            "oracle: A {:?}, B {:?}, C {:?} do not conform",
            a.shape(),
            b.shape(),
            c.shape()
        )));
    }
    linalg::ensure_finite(c, "C")?;
    let (la, qa) = linalg::sym_eig(a)?;
    let (lb, qb) = linalg::sym_eig(b)?;
    let norm = |l: &[f64]| l.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-14 * (norm(&la) + norm(&lb));
    let mut y = linalg::matmul(&linalg::matmul_tn(&qa, c), &qb);
    for j in 0..m {
        for i in 0..n {
            let d = la[i] + lb[j];
            if d.abs() <= floor {
                return Err(Error::SingularPencil { i, j, value: d });
            }
            y[(i, j)] /= d;
        }
    }
    Ok(linalg::matmul_nt(&linalg::matmul(&qa, &y), &qb))
}

/// Dense solution of `AX + XA + Σ M_j X M_jᵀ = C` through the `n² × n²`
/// Kronecker system `(I ⊗ A + A ⊗ I + Σ M_j ⊗ M_j) vec X = vec C`.
/// Intended as a reference for small `n`.
pub fn generalized_kronecker_oracle(a: &DenseMatrix, ms: &[DenseMatrix], c: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    if a.ncols() != n || c.shape() != (n, n) || ms.iter().any(|m| m.shape() != (n, n)) {
        return Err(Error::invalid("kronecker oracle: dimensions do not conform"));
    }
    let nn = n * n;
    // vec index of X_ij (column-major) is i + n j
    let mut k = DenseMatrix::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            for p in 0..n {
                k[(row, p + n * j)] += a[(i, p)];
                k[(row, i + n * p)] += a[(j, p)];
            }
            for m in ms {
                for q in 0..n {
                    let mjq = m[(j, q)];
                    if mjq == 0.0 {
                        continue;
                    }
                    for p in 0..n {
                        k[(row, p + n * q)] += m[(i, p)] * mjq;
                    }
                }
            }
        }
    }
    let rhs = DenseMatrix::from_column_slice(nn, 1, c.as_slice());
    let x = linalg::solve_dense(&k, &rhs)?;
    Ok(DenseMatrix::from_column_slice(n, n, x.as_slice()))
}
