//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{JprError, Result};

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 0; // unlimited

/// Eigendecomposition of a symmetric matrix. Only the lower triangle is read.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or(JprError::EigenFailure)
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(JprError::EigenFailure);
    }
    // eigenvalues only, no eigenvector accumulation
    let mut vals: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 1 {
        return Ok(m[(0, 0)]);
    }
    symmetric_eigenvalues(m).map(|v| *v.last().expect("non-empty matrix"))
}

/// `m` with row and column `j` removed.
pub fn without_index(m: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    m.clone().remove_row(j).remove_column(j)
}

/// Column `j` of `m` with its j-th entry removed.
pub fn column_without(m: &DMatrix<f64>, j: usize) -> DVector<f64> {
    m.column(j).into_owned().remove_row(j)
}

/// Original feature index of entry `k` in a coefficient vector that omits
/// feature `j`: `k` if `k < j`, else `k + 1`.
#[inline]
pub fn other_index(j: usize, k: usize) -> usize {
    if k < j {
        k
    } else {
        k + 1
    }
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Inverse of a symmetric positive-definite matrix via Cholesky, symmetrised.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m.clone().cholesky().ok_or(JprError::NotPositiveDefinite)?;
    let inv = chol.inverse();
    Ok(crate::data::SymMatrix::symmetric_part(&inv).into_inner())
}
