//! Small dense symmetric-positive-definite helpers (Cholesky). Matrices are
//! row-major `Vec<f64>` of dimension k×k; k is the number of experts, so
//! everything here is tiny.

use crate::{Error, Result};

/// Lower Cholesky factor L with A = L Lᵀ. Fails unless A is symmetric
/// positive definite.
pub(crate) fn cholesky(a: &[f64], k: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), k * k);
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for m in 0..j {
                s -= l[i * k + m] * l[j * k + m];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::DegenerateModel(format!(
                        "matrix is not positive definite (pivot {s:.3e} at row {i})"
                    )));
                }
                l[i * k + j] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    Ok(l)
}

/// Solve A x = b given the lower Cholesky factor of A.
pub(crate) fn cholesky_solve(l: &[f64], k: usize, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(b.len(), k);
    // Forward: L y = b.
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = b[i];
        for m in 0..i {
            s -= l[i * k + m] * y[m];
        }
        y[i] = s / l[i * k + i];
    }
    // Backward: Lᵀ x = y.
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for m in (i + 1)..k {
            s -= l[m * k + i] * x[m];
        }
        x[i] = s / l[i * k + i];
    }
    x
}

/// Check symmetry within an absolute tolerance scaled by the diagonal.
pub(crate) fn check_symmetric(a: &[f64], k: usize, tol: f64) -> Result<()> {
    for i in 0..k {
        for j in (i + 1)..k {
            let scale = a[i * k + i].abs().max(a[j * k + j].abs()).max(1.0);
            if (a[i * k + j] - a[j * k + i]).abs() > tol * scale {
                return Err(Error::Domain(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    a[i * k + j],
                    a[j * k + i]
                )));
            }
        }
    }
    Ok(())
}
