//! Small dense helpers for symmetric positive definite matrices.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest accepted condition number when inverting an information matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Spectral condition estimate `lambda_max / lambda_min`; infinite when not positive definite.
pub fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let eig = SymmetricEigen::new(symmetrized(m)).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if min <= 0.0 || max <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a symmetric positive definite matrix, refusing ill-conditioned input.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let condition = condition_estimate(m);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularInformation { condition });
    }
    cholesky_inverse(m).ok_or(Error::SingularInformation { condition })
}

/// Cholesky-based inverse without the conditioning guard.
pub fn cholesky_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = Cholesky::new(symmetrized(m))?;
    let inv = chol.inverse();
    inv.iter().all(|v| v.is_finite()).then(|| symmetrized(&inv))
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}
