//! Recovery of linear constraint coefficients from black-box constraint
//! evaluations, and assembly of a standard-form problem from a black-box
//! description.
//!
//! Constraints come as a single vector-valued function: one call yields the
//! values of all constraints at a query point. Sampling `L` points and
//! appending a constant column produces an overdetermined linear system
//! `Y W = G` whose least-squares solution (via the pseudoinverse of `Y`)
//! holds the gradient rows and additive terms; the additive terms move to
//! the right-hand side.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::numerics::pseudoinverse;
use crate::standard_form::{
    back_transform, transform_inequalities, Objective, StandardFormError, StandardFormProblem,
    TransformKind,
};

/// A black-box constraint evaluator: one call returns all constraint values.
pub type ConstraintFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Fresh samples used to verify that the recovered system actually
/// reproduces the black box (the recovery is only exact for linear
/// constraints).
pub const HELDOUT_SAMPLES: usize = 20;

/// Relative residual allowed on the held-out check.
pub const HELDOUT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConstraintApproxError {
    #[error("sample matrix is rank deficient; increase the sample count or spread")]
    RankDeficientSamples,
    #[error("constraints do not behave linearly (held-out residual {residual:.3e})")]
    NonLinearConstraintDetected { residual: f64 },
    #[error(transparent)]
    StandardForm(#[from] StandardFormError),
}

/// Linear systems recovered from black-box constraints: `A_ineq y <= b_ineq`
/// and `A_eq y = b_eq`.
#[derive(Debug, Clone)]
pub struct RecoveredConstraints {
    pub a_ineq: DMatrix<f64>,
    pub b_ineq: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

/// Samples `count` points `center + spread * N(0, I)` and fits every
/// constraint as an affine function of the input. `equalities` may be
/// `None` when the problem has no equality constraints.
pub fn approximate_linear_constraints<R: Rng>(
    inequalities: &ConstraintFn,
    equalities: Option<&ConstraintFn>,
    center: &DVector<f64>,
    spread: f64,
    count: usize,
    rng: &mut R,
) -> Result<RecoveredConstraints, ConstraintApproxError> {
    let dim = center.len();
    assert!(count > dim, "need at least dim + 1 samples");
    assert!(spread > 0.0, "spread must be positive");

    let mut samples = Vec::with_capacity(count);
    let mut g_rows: Vec<DVector<f64>> = Vec::with_capacity(count);
    let mut h_rows: Vec<DVector<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let y = DVector::from_fn(dim, |j, _| {
            center[j] + spread * rng.sample::<f64, _>(StandardNormal)
        });
        g_rows.push(inequalities(&y));
        if let Some(h) = equalities {
            h_rows.push(h(&y));
        }
        samples.push(y);
    }

    // Y has the samples as rows plus a constant column for additive terms.
    let y_mat = DMatrix::from_fn(
        count,
        dim + 1,
        |i, j| {
            if j < dim {
                samples[i][j]
            } else {
                1.0
            }
        },
    );
    let svd = y_mat.clone().svd(false, false);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * sigma_max)
        .count();
    if rank < dim + 1 {
        return Err(ConstraintApproxError::RankDeficientSamples);
    }
    let y_pinv = pseudoinverse(&y_mat);

    let fit = |values: &[DVector<f64>]| -> (DMatrix<f64>, DVector<f64>) {
        let k = values.first().map_or(0, |v| v.len());
        let mut a = DMatrix::zeros(k, dim);
        let mut b = DVector::zeros(k);
        for con in 0..k {
            let rhs = DVector::from_fn(count, |l, _| values[l][con]);
            let w = &y_pinv * rhs;
            for j in 0..dim {
                a[(con, j)] = w[j];
            }
            b[con] = -w[dim];
        }
        (a, b)
    };

    let (a_ineq, b_ineq) = fit(&g_rows);
    let (a_eq, b_eq) = if h_rows.is_empty() {
        (DMatrix::zeros(0, dim), DVector::zeros(0))
    } else {
        fit(&h_rows)
    };
    Ok(RecoveredConstraints {
        a_ineq,
        b_ineq,
        a_eq,
        b_eq,
    })
}

/// Verifies a recovery against fresh samples; the residual is relative to
/// the magnitude of the constraint values.
fn validate_recovery<R: Rng>(
    recovered: &RecoveredConstraints,
    inequalities: &ConstraintFn,
    center: &DVector<f64>,
    spread: f64,
    rng: &mut R,
) -> Result<(), ConstraintApproxError> {
    let dim = center.len();
    let mut worst = 0.0_f64;
    for _ in 0..HELDOUT_SAMPLES {
        let y = DVector::from_fn(dim, |j, _| {
            center[j] + spread * rng.sample::<f64, _>(StandardNormal)
        });
        let actual = inequalities(&y);
        let predicted = &recovered.a_ineq * &y - &recovered.b_ineq;
        for (a, p) in actual.iter().zip(predicted.iter()) {
            worst = worst.max((a - p).abs() / (1.0 + a.abs()));
        }
    }
    if worst > HELDOUT_TOL {
        return Err(ConstraintApproxError::NonLinearConstraintDetected { residual: worst });
    }
    Ok(())
}

/// Builds a standard-form problem from a black-box objective with black-box
/// inequality constraints and box bounds.
///
/// Recovers the constraint system around the origin with unit spread and
/// `10 (dim + 1)` samples, validates it on held-out points, feeds the
/// result through the inequality transform, and wraps the objective behind
/// the back-transformation. Returns the problem together with the number of
/// constraint-function calls spent, which is also recorded on the problem
/// itself so runs charge it against their evaluation budget.
pub fn preprocess_blackbox_problem<R: Rng>(
    objective: Objective,
    constraints: ConstraintFn,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    rng: &mut R,
) -> Result<(StandardFormProblem, u64), ConstraintApproxError> {
    let dim = lower.len();
    assert_eq!(upper.len(), dim);
    let center = DVector::zeros(dim);
    let samples = 10 * (dim + 1);
    let recovered = approximate_linear_constraints(&constraints, None, &center, 1.0, samples, rng)?;
    validate_recovery(&recovered, &constraints, &center, 1.0, rng)?;
    let constraint_evals = (samples + HELDOUT_SAMPLES) as u64;

    let (a, b) = transform_inequalities(&recovered.a_ineq, &recovered.b_ineq, lower, upper)?;
    let k_prime = recovered.a_ineq.nrows();
    let wrapped: Objective = {
        let inner = objective;
        Arc::new(move |x: &DVector<f64>| {
            let y = back_transform(x, dim, k_prime, TransformKind::General)
                .expect("standard-form vector has the transformed length");
            inner(&y)
        })
    };
    Ok((
        StandardFormProblem {
            a,
            b,
            objective: wrapped,
            orig_dim: dim,
            orig_ineq_count: k_prime,
            transform_kind: TransformKind::General,
            constraint_evals_spent: constraint_evals,
        },
        constraint_evals,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn affine_constraint() -> ConstraintFn {
        Arc::new(|y: &DVector<f64>| DVector::from_row_slice(&[2.0 * y[0] - 3.0 * y[1] + 1.0]))
    }

    #[test]
    fn recovers_affine_inequality() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let g = affine_constraint();
        let center = DVector::zeros(2);
        let rec = approximate_linear_constraints(&g, None, &center, 1.0, 30, &mut rng).unwrap();
        assert_abs_diff_eq!(rec.a_ineq[(0, 0)], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rec.a_ineq[(0, 1)], -3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rec.b_ineq[0], -1.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_constraint_recovers_zero_row() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let g: ConstraintFn = Arc::new(|_y| DVector::from_row_slice(&[0.0]));
        let center = DVector::zeros(3);
        let rec = approximate_linear_constraints(&g, None, &center, 1.0, 40, &mut rng).unwrap();
        assert!(rec.a_ineq.amax() <= 1e-10);
        assert!(rec.b_ineq.amax() <= 1e-10);
    }

    #[test]
    fn recovers_equality_rows() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let g: ConstraintFn = Arc::new(|y| DVector::from_row_slice(&[y[0] + y[1]]));
        let h: ConstraintFn = Arc::new(|y| DVector::from_row_slice(&[y[0] - y[1]]));
        let center = DVector::zeros(2);
        let rec = approximate_linear_constraints(&g, Some(&h), &center, 1.0, 30, &mut rng).unwrap();
        assert_abs_diff_eq!(rec.a_eq[(0, 0)], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rec.a_eq[(0, 1)], -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rec.b_eq[0], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn degenerate_sampling_is_rejected() {
        // A vanishing spread collapses every sample onto the center, so the
        // sample columns are multiples of the constant column.
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let g = affine_constraint();
        let center = DVector::zeros(2);
        assert!(matches!(
            approximate_linear_constraints(&g, None, &center, 1e-300, 30, &mut rng),
            Err(ConstraintApproxError::RankDeficientSamples)
        ));
    }

    #[test]
    fn nonlinear_constraints_are_detected() {
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let f: Objective = Arc::new(|y: &DVector<f64>| y.norm_squared());
        let g: ConstraintFn = Arc::new(|y| DVector::from_row_slice(&[y[0] * y[0] - 1.0]));
        let lower = DVector::from_row_slice(&[-5.0, -5.0]);
        let upper = DVector::from_row_slice(&[5.0, 5.0]);
        assert!(matches!(
            preprocess_blackbox_problem(f, g, &lower, &upper, &mut rng),
            Err(ConstraintApproxError::NonLinearConstraintDetected { .. })
        ));
    }

    #[test]
    fn preprocess_produces_consistent_problem() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let f: Objective = Arc::new(|y: &DVector<f64>| y.norm_squared());
        let g: ConstraintFn = Arc::new(|y| DVector::from_row_slice(&[y[0] + y[1] - 4.0]));
        let lower = DVector::from_row_slice(&[-5.0, -5.0]);
        let upper = DVector::from_row_slice(&[5.0, 5.0]);
        let (problem, cost) = preprocess_blackbox_problem(f, g, &lower, &upper, &mut rng).unwrap();
        assert_eq!(problem.dim(), 4 * 2 + 1);
        assert_eq!(problem.a.nrows(), 1 + 2 * 2);
        assert_eq!(cost, (10 * 3 + HELDOUT_SAMPLES) as u64);
        assert_eq!(problem.constraint_evals_spent, cost);

        // Objective equivalence through the lift.
        use crate::standard_form::lift_feasible_point;
        use rand::Rng as _;
        let w = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let c = DVector::from_row_slice(&[4.0]);
        for _ in 0..100 {
            let y = DVector::from_fn(2, |_, _| rng.random_range(-2.0..2.0));
            let x = lift_feasible_point(&y, &w, &c, &lower, &upper, 1.0).unwrap();
            let expected = y.norm_squared();
            let got = (problem.objective)(&x);
            assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        }
    }
}
