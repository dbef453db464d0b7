//! Small dense linear-algebra helpers shared across the controller stack.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold below which a direction is treated as
/// numerically rank-deficient.
pub const PINV_CUTOFF: f64 = 1e-6;

/// Damping applied to singular values below [`PINV_CUTOFF`] so that
/// near-singular operators degrade gracefully instead of blowing up.
pub const PINV_DAMPING: f64 = 1e-8;

/// Symmetric eigendecomposition based pseudo-inverse for symmetric PSD
/// matrices (Gram matrices of the form `X A⁻¹ Xᵀ`).
///
/// Eigenvalues above `cutoff * max_eig` are inverted exactly; smaller ones
/// are damped as `σ / (σ² + damping)`, which goes to zero with σ and keeps
/// projector identities built from the result accurate to machine precision.
pub fn sym_pinv(m: &DMatrix<f64>, cutoff: f64, damping: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let max_abs = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    let thresh = cutoff * max_abs.max(f64::MIN_POSITIVE);
    let mut inv_vals = eig.eigenvalues.clone();
    for v in inv_vals.iter_mut() {
        *v = if v.abs() >= thresh {
            1.0 / *v
        } else {
            *v / (*v * *v + damping)
        };
    }
    let vt = eig.eigenvectors.transpose();
    &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * vt
}

/// Condition number estimate (ratio of extreme absolute eigenvalues) for a
/// symmetric matrix. Returns `f64::INFINITY` for numerically singular input.
pub fn sym_condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v.abs());
        hi = hi.max(v.abs());
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Solve `M x = rhs` for symmetric positive-definite `M` via Cholesky,
/// falling back to the damped pseudo-inverse when the factorization fails.
pub fn spd_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    match m.clone().cholesky() {
        Some(chol) => chol.solve(rhs),
        None => sym_pinv(m, PINV_CUTOFF, PINV_DAMPING) * rhs,
    }
}

/// Inverse of a symmetric positive-definite matrix via Cholesky, with the
/// damped pseudo-inverse as fallback for semi-definite input.
pub fn spd_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    match m.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => sym_pinv(m, PINV_CUTOFF, PINV_DAMPING),
    }
}
