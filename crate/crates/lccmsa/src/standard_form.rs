//! Transformation of general linear-constraint problems into standard form
//! `Ax = b, x >= 0`, lifting of feasible points, and back-transformation of
//! solutions.
//!
//! The general transform splits each original variable `y` into a difference
//! of non-negative parts `x' - x''`, adds slack `u` for the inequalities and
//! helper variables `v`, `w` for the bounds, producing the block system
//!
//! ```text
//! ( W  -W  I   0  0 ) (x' )   ( c )
//! ( I  -I  0  -I  0 ) (x'')   ( y̌ )      x', x'', u, v, w >= 0
//! ( I  -I  0   0  I ) (u  ) = ( ŷ )
//!                     (v  )
//!                     (w  )
//! ```
//!
//! so the standard-form dimensions are `D = 4D' + K'` and `K = K' + 2D'`.
//! Problems that natively carry `y >= 0` and no upper bounds (the Klee-Minty
//! family) use the slack-only form `[W | I] x = c` with `D = D' + K'`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A black-box objective over dense vectors.
pub type Objective = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum StandardFormError {
    #[error("bounds must be finite for the general transform (component {index})")]
    NonFiniteBound { index: usize },
    #[error("vector has length {got}, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("seed point violates the original constraints by {violation:.3e}")]
    InfeasibleSeed { violation: f64 },
    #[error("invalid problem document: {0}")]
    BadDocument(String),
}

/// Which transform produced a standard-form problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    General,
    Equality,
    SlackOnly,
}

/// A problem with linear inequalities, equalities and box bounds.
#[derive(Clone)]
pub struct GeneralLinearProblem {
    pub w_ineq: DMatrix<f64>,
    pub c_ineq: DVector<f64>,
    pub w_eq: DMatrix<f64>,
    pub c_eq: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub objective: Objective,
}

/// The standard-form problem `min f(x) s.t. Ax = b, x >= 0` together with
/// the metadata needed to map solutions back to the original space.
#[derive(Clone)]
pub struct StandardFormProblem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub objective: Objective,
    pub orig_dim: usize,
    pub orig_ineq_count: usize,
    pub transform_kind: TransformKind,
    /// Constraint-function calls already spent building this problem
    /// (black-box recovery); they count against the evaluation budget.
    pub constraint_evals_spent: u64,
}

impl StandardFormProblem {
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// Maps a standard-form vector back to the original variable space.
    pub fn back_transform(&self, x: &DVector<f64>) -> Result<DVector<f64>, StandardFormError> {
        back_transform(x, self.orig_dim, self.orig_ineq_count, self.transform_kind)
    }
}

fn check_finite_bounds(
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> Result<(), StandardFormError> {
    for (i, (l, u)) in lower.iter().zip(upper.iter()).enumerate() {
        if !l.is_finite() || !u.is_finite() {
            return Err(StandardFormError::NonFiniteBound { index: i });
        }
    }
    Ok(())
}

/// Builds the three-block-row system for `Wy <= c` with bounds.
pub fn transform_inequalities(
    w: &DMatrix<f64>,
    c: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>), StandardFormError> {
    check_finite_bounds(lower, upper)?;
    let k = w.nrows();
    let d = w.ncols();
    assert_eq!(c.len(), k, "c must match the rows of W");
    assert_eq!(lower.len(), d, "lower must match the columns of W");
    assert_eq!(upper.len(), d, "upper must match the columns of W");

    let rows = k + 2 * d;
    let cols = 4 * d + k;
    let mut a = DMatrix::zeros(rows, cols);
    let mut b = DVector::zeros(rows);

    // (W, -W, I, 0, 0) = c
    for i in 0..k {
        for j in 0..d {
            a[(i, j)] = w[(i, j)];
            a[(i, d + j)] = -w[(i, j)];
        }
        a[(i, 2 * d + i)] = 1.0;
        b[i] = c[i];
    }
    fill_bound_rows(&mut a, &mut b, k, d, k, lower, upper);
    Ok((a, b))
}

/// Builds the equality variant `Wy = c`. The zero block where the slack
/// columns would sit is retained (width `k_prime`) so that equality and
/// inequality rows share the same column layout and can be stacked.
pub fn transform_equalities(
    w: &DMatrix<f64>,
    c: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    k_prime: usize,
) -> Result<(DMatrix<f64>, DVector<f64>), StandardFormError> {
    check_finite_bounds(lower, upper)?;
    let m = w.nrows();
    let d = w.ncols();
    assert_eq!(c.len(), m, "c must match the rows of W");

    let rows = m + 2 * d;
    let cols = 4 * d + k_prime;
    let mut a = DMatrix::zeros(rows, cols);
    let mut b = DVector::zeros(rows);

    // (W, -W, 0, 0, 0) = c
    for i in 0..m {
        for j in 0..d {
            a[(i, j)] = w[(i, j)];
            a[(i, d + j)] = -w[(i, j)];
        }
        b[i] = c[i];
    }
    fill_bound_rows(&mut a, &mut b, m, d, k_prime, lower, upper);
    Ok((a, b))
}

/// Bound rows `(I, -I, 0, -I, 0) = y̌` and `(I, -I, 0, 0, I) = ŷ`,
/// starting at `offset`.
fn fill_bound_rows(
    a: &mut DMatrix<f64>,
    b: &mut DVector<f64>,
    offset: usize,
    d: usize,
    slack_cols: usize,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) {
    for j in 0..d {
        let lo_row = offset + j;
        a[(lo_row, j)] = 1.0;
        a[(lo_row, d + j)] = -1.0;
        a[(lo_row, 2 * d + slack_cols + j)] = -1.0;
        b[lo_row] = lower[j];

        let hi_row = offset + d + j;
        a[(hi_row, j)] = 1.0;
        a[(hi_row, d + j)] = -1.0;
        a[(hi_row, 3 * d + slack_cols + j)] = 1.0;
        b[hi_row] = upper[j];
    }
}

/// Slack-only form for problems that already have `y >= 0` and no upper
/// bounds: `A = [W | I]`, `b = c`.
pub fn transform_nonneg_inequalities(
    w: &DMatrix<f64>,
    c: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let k = w.nrows();
    let d = w.ncols();
    assert_eq!(c.len(), k, "c must match the rows of W");
    let mut a = DMatrix::zeros(k, d + k);
    for i in 0..k {
        for j in 0..d {
            a[(i, j)] = w[(i, j)];
        }
        a[(i, d + i)] = 1.0;
    }
    (a, c.clone())
}

/// Recovers the original variables from a standard-form vector.
pub fn back_transform(
    x: &DVector<f64>,
    d_prime: usize,
    k_prime: usize,
    kind: TransformKind,
) -> Result<DVector<f64>, StandardFormError> {
    let expected = match kind {
        TransformKind::General | TransformKind::Equality => 4 * d_prime + k_prime,
        TransformKind::SlackOnly => d_prime + k_prime,
    };
    if x.len() != expected {
        return Err(StandardFormError::ShapeMismatch {
            got: x.len(),
            expected,
        });
    }
    let y = match kind {
        TransformKind::General | TransformKind::Equality => {
            DVector::from_fn(d_prime, |j, _| x[j] - x[d_prime + j])
        }
        TransformKind::SlackOnly => x.rows(0, d_prime).into_owned(),
    };
    Ok(y)
}

/// Lifts a feasible original-space point `y` into the standard-form space:
/// `u = c - Wy`, `v = y - y̌`, `w = ŷ - y`, `x'_k = max(alpha, y_k)`,
/// `x'' = x' - y`. An `alpha > 0` keeps the start away from the zero
/// boundary.
pub fn lift_feasible_point(
    y: &DVector<f64>,
    w: &DMatrix<f64>,
    c: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>, StandardFormError> {
    assert!(alpha >= 0.0, "alpha must be non-negative");
    let d = y.len();
    let k = w.nrows();
    let slack = c - w * y;
    let mut violation = 0.0_f64;
    for s in slack.iter() {
        violation = violation.max(-s);
    }
    for j in 0..d {
        violation = violation.max(lower[j] - y[j]);
        violation = violation.max(y[j] - upper[j]);
    }
    if violation > 1e-9 {
        return Err(StandardFormError::InfeasibleSeed { violation });
    }

    let mut x = DVector::zeros(4 * d + k);
    for j in 0..d {
        let pos = alpha.max(y[j]);
        x[j] = pos;
        x[d + j] = pos - y[j];
        x[2 * d + k + j] = (y[j] - lower[j]).max(0.0);
        x[3 * d + k + j] = (upper[j] - y[j]).max(0.0);
    }
    for i in 0..k {
        x[2 * d + i] = slack[i].max(0.0);
    }
    Ok(x)
}

/// Contracts the positive common mode of the split variables: subtracting
/// `min(x'_j, x''_j)` from both halves leaves `y = x' - x''` and every
/// constraint row unchanged (the two columns are exact negatives of each
/// other) while keeping the representation bounded. Only components whose
/// common mode exceeds `threshold` are touched so that ordinary mutations
/// keep their sampled bookkeeping. Returns whether anything changed.
pub fn contract_split_variables(x: &mut DVector<f64>, d_prime: usize, threshold: f64) -> bool {
    let mut changed = false;
    for j in 0..d_prime {
        let common = x[j].min(x[d_prime + j]);
        if common > threshold {
            x[j] -= common;
            x[d_prime + j] -= common;
            changed = true;
        }
    }
    changed
}

/// Lift for the slack-only form: `x = (y, c - Wy)`.
pub fn lift_nonneg_point(
    y: &DVector<f64>,
    w: &DMatrix<f64>,
    c: &DVector<f64>,
) -> Result<DVector<f64>, StandardFormError> {
    let slack = c - w * y;
    let mut violation = 0.0_f64;
    for s in slack.iter() {
        violation = violation.max(-s);
    }
    for v in y.iter() {
        violation = violation.max(-v);
    }
    if violation > 1e-9 {
        return Err(StandardFormError::InfeasibleSeed { violation });
    }
    let mut x = DVector::zeros(y.len() + c.len());
    for j in 0..y.len() {
        x[j] = y[j].max(0.0);
    }
    for i in 0..c.len() {
        x[y.len() + i] = slack[i].max(0.0);
    }
    Ok(x)
}

impl GeneralLinearProblem {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Transforms into standard form. Inequality rows and equality rows are
    /// stacked over the shared column layout; the bound rows appear once.
    pub fn to_standard_form(&self) -> Result<StandardFormProblem, StandardFormError> {
        let d = self.dim();
        let k_prime = self.w_ineq.nrows();
        let m_prime = self.w_eq.nrows();

        let (kind, a, b) = if m_prime == 0 {
            let (a, b) =
                transform_inequalities(&self.w_ineq, &self.c_ineq, &self.lower, &self.upper)?;
            (TransformKind::General, a, b)
        } else if k_prime == 0 {
            let (a, b) = transform_equalities(&self.w_eq, &self.c_eq, &self.lower, &self.upper, 0)?;
            (TransformKind::Equality, a, b)
        } else {
            let (a_ineq, b_ineq) =
                transform_inequalities(&self.w_ineq, &self.c_ineq, &self.lower, &self.upper)?;
            let (a_eq, b_eq) =
                transform_equalities(&self.w_eq, &self.c_eq, &self.lower, &self.upper, k_prime)?;
            // Equality constraint rows only; the bound rows are already
            // present in the inequality block.
            let rows = a_ineq.nrows() + m_prime;
            let cols = a_ineq.ncols();
            let mut a = DMatrix::zeros(rows, cols);
            let mut b = DVector::zeros(rows);
            for i in 0..a_ineq.nrows() {
                for j in 0..cols {
                    a[(i, j)] = a_ineq[(i, j)];
                }
                b[i] = b_ineq[i];
            }
            for i in 0..m_prime {
                for j in 0..cols {
                    a[(a_ineq.nrows() + i, j)] = a_eq[(i, j)];
                }
                b[a_ineq.nrows() + i] = b_eq[i];
            }
            (TransformKind::General, a, b)
        };

        let inner = self.objective.clone();
        let ineq_count = if m_prime > 0 && k_prime == 0 {
            0
        } else {
            k_prime
        };
        let kind_copy = kind;
        let objective: Objective = Arc::new(move |x: &DVector<f64>| {
            let y = back_transform(x, d, ineq_count, kind_copy)
                .expect("standard-form vector has the transformed length");
            inner(&y)
        });

        Ok(StandardFormProblem {
            a,
            b,
            objective,
            orig_dim: d,
            orig_ineq_count: ineq_count,
            transform_kind: kind,
            constraint_evals_spent: 0,
        })
    }
}

// ---------------------------------------------------------------------------
// JSON problem documents
// ---------------------------------------------------------------------------

/// Objective description inside a problem document: either the bare name of
/// a builtin, a builtin with an argument shift, or explicit linear
/// coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectiveJson {
    Named(String),
    Shifted {
        kind: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vec<f64>>,
    },
    Linear {
        linear: Vec<f64>,
    },
}

/// On-disk problem description. Field names are part of the format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    #[serde(rename = "W_ineq", default)]
    pub w_ineq: Vec<Vec<f64>>,
    #[serde(default)]
    pub c_ineq: Vec<f64>,
    #[serde(rename = "W_eq", default)]
    pub w_eq: Vec<Vec<f64>>,
    #[serde(default)]
    pub c_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: ObjectiveJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_opt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_only: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Problems with native `y >= 0` and no upper bounds use the slack-only
    /// transform; `lower`/`upper` are ignored for them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub native_nonneg: Option<bool>,
}

impl ProblemJson {
    pub fn parse(text: &str) -> Result<Self, StandardFormError> {
        let doc: ProblemJson = serde_json::from_str(text)
            .map_err(|e| StandardFormError::BadDocument(e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    fn validate(&self) -> Result<(), StandardFormError> {
        let d = self.lower.len();
        let native = self.native_nonneg.unwrap_or(false);
        if !native {
            if self.upper.len() != d {
                return Err(StandardFormError::BadDocument(format!(
                    "field `upper` has length {}, expected {d}",
                    self.upper.len()
                )));
            }
            for (l, u) in self.lower.iter().zip(self.upper.iter()) {
                if l.is_finite() && u.is_finite() && l > u {
                    return Err(StandardFormError::BadDocument(
                        "field `lower` exceeds `upper`".into(),
                    ));
                }
            }
        }
        if self.w_ineq.len() != self.c_ineq.len() {
            return Err(StandardFormError::BadDocument(format!(
                "field `W_ineq` has {} rows but `c_ineq` has {} entries",
                self.w_ineq.len(),
                self.c_ineq.len()
            )));
        }
        if self.w_eq.len() != self.c_eq.len() {
            return Err(StandardFormError::BadDocument(format!(
                "field `W_eq` has {} rows but `c_eq` has {} entries",
                self.w_eq.len(),
                self.c_eq.len()
            )));
        }
        for (i, row) in self.w_ineq.iter().chain(self.w_eq.iter()).enumerate() {
            if row.len() != d {
                return Err(StandardFormError::BadDocument(format!(
                    "constraint row {i} has {} coefficients, expected {d}",
                    row.len()
                )));
            }
        }
        Ok(())
    }

    /// Builds the constraint data; the objective is resolved by the caller
    /// (builtin objectives live in the problems module).
    pub fn to_general(&self, objective: Objective) -> GeneralLinearProblem {
        let d = self.lower.len();
        let rows =
            |m: &Vec<Vec<f64>>| -> DMatrix<f64> { DMatrix::from_fn(m.len(), d, |i, j| m[i][j]) };
        GeneralLinearProblem {
            w_ineq: rows(&self.w_ineq),
            c_ineq: DVector::from_row_slice(&self.c_ineq),
            w_eq: rows(&self.w_eq),
            c_eq: DVector::from_row_slice(&self.c_eq),
            lower: DVector::from_row_slice(&self.lower),
            upper: DVector::from_row_slice(&self.upper),
            objective,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility;
    use approx::assert_abs_diff_eq;

    fn sum_objective() -> Objective {
        Arc::new(|y: &DVector<f64>| y.sum())
    }

    #[test]
    fn inequality_transform_shapes() {
        let w = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let c = DVector::from_row_slice(&[1.0]);
        let lo = DVector::from_row_slice(&[0.0, 0.0]);
        let hi = DVector::from_row_slice(&[1.0, 1.0]);
        let (a, b) = transform_inequalities(&w, &c, &lo, &hi).unwrap();
        assert_eq!(a.shape(), (5, 9));
        assert_eq!(b.len(), 5);
    }

    #[test]
    fn lifted_point_satisfies_standard_form() {
        let w = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let c = DVector::from_row_slice(&[1.0]);
        let lo = DVector::from_row_slice(&[0.0, 0.0]);
        let hi = DVector::from_row_slice(&[1.0, 1.0]);
        let (a, b) = transform_inequalities(&w, &c, &lo, &hi).unwrap();
        let y = DVector::from_row_slice(&[0.5, 0.5]);
        let x = lift_feasible_point(&y, &w, &c, &lo, &hi, 1.0).unwrap();
        assert!(feasibility::is_feasible(&a, &b, &x));
        // u = c - Wy = 0, v = w = (0.5, 0.5)
        assert_abs_diff_eq!(x[4], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[5], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(x[7], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn vacuous_constraint_lifts() {
        let w = DMatrix::from_row_slice(1, 1, &[0.0]);
        let c = DVector::from_row_slice(&[0.0]);
        let lo = DVector::from_row_slice(&[0.0]);
        let hi = DVector::from_row_slice(&[1.0]);
        let (a, b) = transform_inequalities(&w, &c, &lo, &hi).unwrap();
        let x =
            lift_feasible_point(&DVector::from_row_slice(&[0.5]), &w, &c, &lo, &hi, 1.0).unwrap();
        assert!(feasibility::is_feasible(&a, &b, &x));
    }

    #[test]
    fn alpha_controls_positive_part() {
        let w = DMatrix::from_row_slice(1, 1, &[0.0]);
        let c = DVector::from_row_slice(&[0.0]);
        let lo = DVector::from_row_slice(&[0.0]);
        let hi = DVector::from_row_slice(&[1.0]);
        let x =
            lift_feasible_point(&DVector::from_row_slice(&[0.5]), &w, &c, &lo, &hi, 1.0).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn equality_transform_keeps_zero_slack_block() {
        let w = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let c = DVector::from_row_slice(&[0.0]);
        let lo = DVector::from_row_slice(&[0.0, 0.0]);
        let hi = DVector::from_row_slice(&[1.0, 1.0]);
        let (a, b) = transform_equalities(&w, &c, &lo, &hi, 1).unwrap();
        assert_eq!(a.shape(), (5, 9));
        // Slack column block (column index 2*2 = 4) is all zero.
        for i in 0..5 {
            assert_eq!(a[(i, 4)], 0.0);
        }
        // y = (0.3, 0.3) satisfies Wy = 0; lift ignores the missing slack by
        // construction of the zero block.
        let y = DVector::from_row_slice(&[0.3, 0.3]);
        let mut x = lift_feasible_point(&y, &w, &c, &lo, &hi, 1.0).unwrap();
        // The lift stores u in the slack slot; with the zero block the value
        // is irrelevant but must be non-negative.
        x[4] = 0.0;
        assert!(feasibility::is_feasible(&a, &b, &x));
    }

    #[test]
    fn nonneg_transform_is_w_i_block() {
        let w = DMatrix::from_row_slice(1, 1, &[1.0]);
        let c = DVector::from_row_slice(&[5.0]);
        let (a, b) = transform_nonneg_inequalities(&w, &c);
        assert_eq!(a.shape(), (1, 2));
        assert_eq!(a[(0, 0)], 1.0);
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(b[0], 5.0);

        let w2 = DMatrix::identity(2, 2);
        let c2 = DVector::from_row_slice(&[1.0, 1.0]);
        let (a2, b2) = transform_nonneg_inequalities(&w2, &c2);
        assert_eq!(a2.shape(), (2, 4));
        let y = DVector::from_row_slice(&[0.2, 0.2]);
        let x = lift_nonneg_point(&y, &w2, &c2).unwrap();
        assert!(feasibility::is_feasible(&a2, &b2, &x));
        assert_abs_diff_eq!(x[2], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn back_transform_variants() {
        let x = DVector::from_row_slice(&[3.0, 1.0, 0.0, 0.0, 0.0]);
        let y = back_transform(&x, 1, 1, TransformKind::General).unwrap();
        assert_eq!(y.len(), 1);
        assert_abs_diff_eq!(y[0], 2.0, epsilon = 1e-15);

        let x = DVector::from_row_slice(&[5.0, 0.0, 1.0, 2.0]);
        let y = back_transform(&x, 2, 2, TransformKind::SlackOnly).unwrap();
        assert_eq!(y.as_slice(), &[5.0, 0.0]);

        assert!(matches!(
            back_transform(&x, 3, 2, TransformKind::SlackOnly),
            Err(StandardFormError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn round_trip_is_exact_for_feasible_points() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let w = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, -1.0, 0.5, -0.25, 1.0]);
        let c = DVector::from_row_slice(&[10.0, 10.0]);
        let lo = DVector::from_row_slice(&[-2.0, -2.0, -2.0]);
        let hi = DVector::from_row_slice(&[2.0, 2.0, 2.0]);
        let mut tested = 0;
        while tested < 200 {
            let y = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            if (&c - &w * &y).iter().any(|s| *s < 0.0) {
                continue;
            }
            tested += 1;
            let x = lift_feasible_point(&y, &w, &c, &lo, &hi, 1.0).unwrap();
            let back = back_transform(&x, 3, 2, TransformKind::General).unwrap();
            for j in 0..3 {
                assert_abs_diff_eq!(back[j], y[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_infeasible_seed() {
        let w = DMatrix::from_row_slice(1, 1, &[1.0]);
        let c = DVector::from_row_slice(&[1.0]);
        let lo = DVector::from_row_slice(&[0.0]);
        let hi = DVector::from_row_slice(&[1.0]);
        let y = DVector::from_row_slice(&[2.0]);
        assert!(matches!(
            lift_feasible_point(&y, &w, &c, &lo, &hi, 1.0),
            Err(StandardFormError::InfeasibleSeed { .. })
        ));
    }

    #[test]
    fn objective_wraps_back_transform() {
        let w = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let problem = GeneralLinearProblem {
            w_ineq: w,
            c_ineq: DVector::from_row_slice(&[4.0]),
            w_eq: DMatrix::zeros(0, 2),
            c_eq: DVector::zeros(0),
            lower: DVector::from_row_slice(&[-1.0, -1.0]),
            upper: DVector::from_row_slice(&[2.0, 2.0]),
            objective: sum_objective(),
        };
        let sf = problem.to_standard_form().unwrap();
        assert_eq!(sf.dim(), 4 * 2 + 1);
        let y = DVector::from_row_slice(&[0.25, -0.5]);
        let x = lift_feasible_point(
            &y,
            &problem.w_ineq,
            &problem.c_ineq,
            &problem.lower,
            &problem.upper,
            1.0,
        )
        .unwrap();
        let direct = (problem.objective)(&y);
        assert_eq!((sf.objective)(&x), direct);
    }

    #[test]
    fn stacked_equalities_share_column_layout() {
        let problem = GeneralLinearProblem {
            w_ineq: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            c_ineq: DVector::from_row_slice(&[3.0]),
            w_eq: DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            c_eq: DVector::from_row_slice(&[0.0]),
            lower: DVector::from_row_slice(&[-1.0, -1.0]),
            upper: DVector::from_row_slice(&[2.0, 2.0]),
            objective: sum_objective(),
        };
        let sf = problem.to_standard_form().unwrap();
        assert_eq!(sf.a.ncols(), 9);
        assert_eq!(sf.a.nrows(), 5 + 1);
        // y = (0.5, 0.5) satisfies both constraint groups.
        let y = DVector::from_row_slice(&[0.5, 0.5]);
        let x = lift_feasible_point(
            &y,
            &problem.w_ineq,
            &problem.c_ineq,
            &problem.lower,
            &problem.upper,
            1.0,
        )
        .unwrap();
        assert!(feasibility::is_feasible(&sf.a, &sf.b, &x));
    }

    #[test]
    fn parses_problem_documents() {
        let doc = ProblemJson::parse(
            r#"{
                "W_ineq": [[1.0, 1.0]],
                "c_ineq": [4.0],
                "lower": [-5.0, -5.0],
                "upper": [5.0, 5.0],
                "objective": "sphere"
            }"#,
        )
        .unwrap();
        assert_eq!(doc.w_ineq.len(), 1);
        assert!(matches!(doc.objective, ObjectiveJson::Named(ref n) if n == "sphere"));

        let err = ProblemJson::parse(
            r#"{"W_ineq": [[1.0]], "c_ineq": [], "lower": [0.0], "upper": [1.0],
                "objective": "sphere"}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("W_ineq"));
    }
}
