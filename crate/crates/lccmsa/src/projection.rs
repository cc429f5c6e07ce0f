//! Repair of infeasible points onto `{x : Ax = b, x >= 0}`.
//!
//! Two methods are provided. [`project_l1`] finds the l1-closest feasible
//! point by solving a linear program. [`project_iterative`] moves the point
//! toward a randomly chosen feasible reference point just far enough that
//! the most negative component reaches zero; it runs in `O(D)` and is the
//! one used in the strategy's hot path. Reference points are set up once
//! per run by [`init_reference_points`].

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::feasibility;
use crate::lp::{DenseSimplex, LpError, LpSolver};

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("feasible region is empty")]
    InfeasibleRegion,
    #[error("input violates Ax = b (residual {residual:.3e} > tol {tol:.3e})")]
    PreconditionViolated { residual: f64, tol: f64 },
    #[error("direction toward the chosen reference point cannot fix a negative component")]
    StalledDirection,
    #[error("projection failed numerically: {0}")]
    Failed(String),
}

/// A set of feasible reference points used by the iterative projection.
///
/// Every point satisfies `Ap = b` within tolerance and `p >= 0` up to
/// round-off; the set is immutable after construction.
#[derive(Debug, Clone)]
pub struct ReferencePointSet {
    points: Vec<DVector<f64>>,
}

impl ReferencePointSet {
    pub fn new(
        points: Vec<DVector<f64>>,
        a: &DMatrix<f64>,
        b: &DVector<f64>,
    ) -> Result<Self, ProjectionError> {
        if points.is_empty() {
            return Err(ProjectionError::Failed(
                "reference point set is empty".into(),
            ));
        }
        for p in &points {
            if !feasibility::is_feasible(a, b, p) {
                return Err(ProjectionError::Failed(
                    "reference point violates feasibility".into(),
                ));
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }
}

/// l1-minimal projection onto the feasible polyhedron via a linear program.
///
/// The absolute values are modeled with an auxiliary vector `z >= |x' - x|`
/// and slack variables bring the system to solver standard form. Already
/// feasible inputs are returned unchanged.
pub fn project_l1(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>, ProjectionError> {
    project_l1_with(x, a, b, &DenseSimplex::default())
}

/// [`project_l1`] with a caller-supplied LP solver.
pub fn project_l1_with(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    solver: &dyn LpSolver,
) -> Result<DVector<f64>, ProjectionError> {
    let d = x.len();
    let k = a.nrows();
    assert_eq!(a.ncols(), d, "A and x disagree on the dimension");

    if feasibility::is_feasible(a, b, x) {
        return Ok(x.clone());
    }

    // Variables: x'(d), z(d), s1(d), s2(d).
    let n = 4 * d;
    let rows = k + 2 * d;
    let mut m = DMatrix::zeros(rows, n);
    let mut rhs = DVector::zeros(rows);
    for i in 0..k {
        for j in 0..d {
            m[(i, j)] = a[(i, j)];
        }
        rhs[i] = b[i];
    }
    for j in 0..d {
        // z_j - x'_j - s1_j = -x_j   (z - x' >= -x)
        let r1 = k + j;
        m[(r1, j)] = -1.0;
        m[(r1, d + j)] = 1.0;
        m[(r1, 2 * d + j)] = -1.0;
        rhs[r1] = -x[j];
        // z_j + x'_j - s2_j = x_j    (z + x' >= x)
        let r2 = k + d + j;
        m[(r2, j)] = 1.0;
        m[(r2, d + j)] = 1.0;
        m[(r2, 3 * d + j)] = -1.0;
        rhs[r2] = x[j];
    }
    let mut costs = DVector::zeros(n);
    for j in 0..d {
        costs[d + j] = 1.0;
    }

    let solution = solver.solve(&costs, &m, &rhs).map_err(|e| match e {
        LpError::Infeasible => ProjectionError::InfeasibleRegion,
        other => ProjectionError::Failed(other.to_string()),
    })?;
    let projected = solution.x.rows(0, d).into_owned();
    if !feasibility::is_feasible(a, b, &projected) {
        return Err(ProjectionError::Failed(
            "LP solution violates the feasibility tolerances".into(),
        ));
    }
    Ok(projected)
}

/// Builds `count` reference points by projecting uniform random vectors
/// drawn from `U[-||x||, ||x||]^D` (interval `[-1, 1]` when `||x|| = 0`).
pub fn init_reference_points<R: Rng>(
    x: &DVector<f64>,
    count: usize,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    rng: &mut R,
) -> Result<ReferencePointSet, ProjectionError> {
    let mut radius = x.norm();
    if radius == 0.0 {
        radius = 1.0;
    }
    init_reference_points_with_radius(radius, count, a, b, rng)
}

/// [`init_reference_points`] with an explicit sampling radius. The raw
/// points must reach the far vertices of the polyhedron or the projections
/// cluster near the origin, so callers can widen the interval beyond the
/// norm of their seed point.
pub fn init_reference_points_with_radius<R: Rng>(
    radius: f64,
    count: usize,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    rng: &mut R,
) -> Result<ReferencePointSet, ProjectionError> {
    assert!(count >= 1, "need at least one reference point");
    assert!(radius > 0.0, "sampling radius must be positive");
    let d = a.ncols();
    let solver = DenseSimplex::default();
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = DVector::from_fn(d, |_, _| rng.random_range(-radius..=radius));
        let p = project_l1_with(&raw, a, b, &solver)?;
        points.push(p);
    }
    ReferencePointSet::new(points, a, b)
}

/// Moves `x` toward a uniformly chosen reference point until the worst
/// negative component reaches zero: `x + alpha * (p - x)` with
/// `alpha = max_k resolving x_k < 0`. Runs in `O(D)` given the draw.
pub fn project_iterative<R: Rng>(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    set: &ReferencePointSet,
    rng: &mut R,
) -> Result<DVector<f64>, ProjectionError> {
    let d = x.len();
    assert!(d > 0, "dimension must be positive");
    // The full residual is a K x D product; checking a bounded row sample
    // keeps this operation linear in the dimension. Systems small enough
    // for the full check (every benchmark in this crate) get it.
    let (residual, a_scale) = sampled_equality_residual(a, b, x, 32);
    // A point that satisfies Ax = b in exact arithmetic still shows a
    // residual of order eps * ||A|| * ||x|| in floats, which outgrows the
    // right-hand-side tolerance for very large mutations.
    let tol =
        feasibility::equality_tol(b) + 1024.0 * f64::EPSILON * (1.0 + a_scale) * (1.0 + x.amax());
    if residual > tol {
        return Err(ProjectionError::PreconditionViolated { residual, tol });
    }

    let p = &set.points()[rng.random_range(0..set.len())];
    // The step factor is alpha = max_k -x_k/d_k over the negative
    // components. It is evaluated through its complement
    // beta = 1 - alpha = min_k p_k/(p_k - x_k), and the result as
    // p + beta (x - p): algebraically identical to x + alpha d, but the
    // round-off is of the order of the landing point instead of the
    // (possibly enormous) mutated input.
    let mut beta = 1.0_f64;
    let mut needs_repair = false;
    for k in 0..d {
        if x[k] < 0.0 {
            let dir = p[k] - x[k];
            if dir.abs() == 0.0 {
                return Err(ProjectionError::StalledDirection);
            }
            needs_repair = true;
            beta = beta.min(p[k] / dir);
        }
    }
    if !needs_repair {
        return Ok(x.clone());
    }
    let mut projected = DVector::from_fn(d, |k, _| p[k] + beta * (x[k] - p[k]));
    // The worst component lands at zero only up to round-off; snap the dust
    // so downstream non-negativity checks (absolute tolerance) hold at any
    // data scale.
    feasibility::snap_numerical_zeros(&mut projected);
    Ok(projected)
}

/// Max-norm residual of `Ax - b` over at most `max_rows` stride-sampled
/// rows, together with the largest coefficient magnitude seen. Complete
/// when the system has at most `max_rows` rows.
fn sampled_equality_residual(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    max_rows: usize,
) -> (f64, f64) {
    let k = a.nrows();
    let stride = k.div_ceil(max_rows).max(1);
    let mut residual = 0.0_f64;
    let mut scale = 0.0_f64;
    let mut i = 0;
    while i < k {
        let mut dot = 0.0;
        for j in 0..x.len() {
            let coeff = a[(i, j)];
            scale = scale.max(coeff.abs());
            dot += coeff * x[j];
        }
        residual = residual.max((dot - b[i]).abs());
        i += stride;
    }
    (residual, scale)
}

/// Repair policy used by the strategy: iterative projection with fresh
/// reference draws on a stalled direction (up to `|P|` attempts), then the
/// l1 projection as a last resort.
pub fn repair_to_orthant<R: Rng>(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    set: &ReferencePointSet,
    rng: &mut R,
) -> Result<DVector<f64>, ProjectionError> {
    for _ in 0..set.len() {
        match project_iterative(x, a, b, set, rng) {
            Ok(p) => return Ok(p),
            Err(ProjectionError::StalledDirection) => continue,
            Err(other) => return Err(other),
        }
    }
    project_l1(x, a, b)
}
