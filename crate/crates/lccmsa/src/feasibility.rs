//! Shared feasibility tolerances for the standard-form polyhedron
//! `{x : Ax = b, x >= 0}`.
//!
//! Every module agrees on the same two tolerances so that a point accepted
//! by one stage (projection, say) is never rejected by another (the
//! objective-evaluation guard).

use nalgebra::{DMatrix, DVector};

/// Relative coefficient for the equality residual: a point is on the
/// manifold when `||Ax - b||_inf <= EQUALITY_TOL_COEFF * (1 + ||b||_inf)`.
pub const EQUALITY_TOL_COEFF: f64 = 1e-9;

/// Components may undershoot zero by at most this much.
pub const NONNEG_TOL: f64 = -1e-12;

/// Absolute equality tolerance for a given right-hand side.
pub fn equality_tol(b: &DVector<f64>) -> f64 {
    EQUALITY_TOL_COEFF * (1.0 + b.amax())
}

/// Max-norm residual of the equality constraints at `x`.
pub fn equality_residual(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    (a * x - b).amax()
}

/// Most negative component of `x` (zero for an empty vector).
pub fn min_component(x: &DVector<f64>) -> f64 {
    x.iter().copied().fold(0.0_f64, f64::min)
}

/// Whether `x` lies in the feasible polyhedron up to the shared tolerances.
pub fn is_feasible(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> bool {
    equality_residual(a, b, x) <= equality_tol(b) && min_component(x) >= NONNEG_TOL
}

/// Rounds negative components that are zero up to floating-point dust
/// (relative to the vector's magnitude) to exact zeros. The non-negativity
/// tolerance is absolute, so on large-scale problems a component that is
/// mathematically zero must not be left at `-1` ulp of the data scale.
pub fn snap_numerical_zeros(x: &mut DVector<f64>) {
    let threshold = 64.0 * f64::EPSILON * (1.0 + x.amax());
    for v in x.iter_mut() {
        if *v < 0.0 && *v >= -threshold {
            *v = 0.0;
        }
    }
}
