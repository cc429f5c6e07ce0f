//! Optimum computation for the randomly constrained instances.
//!
//! For convex objectives over the polytope `{Wy <= c} ∩ box`, the optimum
//! lies in the relative interior of some face, and on that face's affine
//! hull the restricted stationary point of the objective coincides with the
//! constrained optimum. Enumerating the affine hulls of all candidate faces
//! (independent subsets of the halfspace rows, up to `dim` of them),
//! minimizing exactly on each, and keeping the best feasible candidate
//! therefore yields the exact optimum.
//!
//! When the subset count would be excessive, or the objective is
//! multimodal, a seeded multi-start projected-gradient search provides a
//! reference value instead.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{eval_objective, graded, objective_gradient, rotation_for, ObjectiveKind};
use crate::numerics::{min_norm_solution, orthonormal_null_space_basis, NumericsError};

/// Halfspace `normal . y <= offset`.
#[derive(Debug, Clone)]
struct Halfspace {
    normal: DVector<f64>,
    offset: f64,
}

const MAX_SUBSETS: usize = 200_000;

/// Returns `(f_opt, x_opt, reference_only)` for the instance data.
#[allow(clippy::too_many_arguments)]
pub(super) fn solve(
    kind: ObjectiveKind,
    shift: &DVector<f64>,
    w: &DMatrix<f64>,
    c: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    interior: &DVector<f64>,
    oracle_seed: u64,
) -> (f64, Option<DVector<f64>>, bool) {
    let dim = shift.len();
    let halfspaces = build_halfspaces(w, c, lower, upper);

    if kind == ObjectiveKind::Rastrigin {
        let (f, y) = multistart(kind, shift, &halfspaces, interior, oracle_seed, 1000, 100);
        return (f, Some(y), true);
    }

    if subset_budget(halfspaces.len(), dim) <= MAX_SUBSETS {
        let (f, y) = enumerate_faces(kind, shift, &halfspaces, interior, dim);
        (f, Some(y), false)
    } else {
        let (f, y) = multistart(kind, shift, &halfspaces, interior, oracle_seed, 16, 2000);
        let (f, y) = polish_on_active_face(kind, shift, &halfspaces, f, y);
        (f, Some(y), false)
    }
}

/// Independent refinement route: multi-start projected gradient over the
/// same polytope, anchored at the Euclidean projection of the origin. Used
/// to cross-check the stored optima.
#[allow(clippy::too_many_arguments)]
pub(super) fn multistart_reference(
    kind: ObjectiveKind,
    shift: &DVector<f64>,
    w: &DMatrix<f64>,
    c: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    seed: u64,
    starts: usize,
    iters: usize,
) -> Option<f64> {
    let halfspaces = build_halfspaces(w, c, lower, upper);
    let anchor = project_dykstra(&halfspaces, &DVector::zeros(shift.len()), 3000);
    if !is_feasible(&halfspaces, &anchor, 1e-9) {
        return None;
    }
    Some(multistart(kind, shift, &halfspaces, &anchor, seed, starts, iters).0)
}

fn build_halfspaces(
    w: &DMatrix<f64>,
    c: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> Vec<Halfspace> {
    let dim = lower.len();
    let mut rows = Vec::with_capacity(w.nrows() + 2 * dim);
    for i in 0..w.nrows() {
        rows.push(Halfspace {
            normal: w.row(i).transpose(),
            offset: c[i],
        });
    }
    for j in 0..dim {
        let mut up = DVector::zeros(dim);
        up[j] = 1.0;
        rows.push(Halfspace {
            normal: up,
            offset: upper[j],
        });
        let mut down = DVector::zeros(dim);
        down[j] = -1.0;
        rows.push(Halfspace {
            normal: down,
            offset: -lower[j],
        });
    }
    rows
}

fn subset_budget(rows: usize, dim: usize) -> usize {
    let mut total: usize = 0;
    for k in 0..=dim.min(rows) {
        let mut combos: usize = 1;
        for i in 0..k {
            combos = match combos.checked_mul(rows - i) {
                Some(v) => v / (i + 1),
                None => return usize::MAX,
            };
        }
        total = total.saturating_add(combos);
    }
    total
}

fn is_feasible(halfspaces: &[Halfspace], y: &DVector<f64>, tol_coeff: f64) -> bool {
    halfspaces
        .iter()
        .all(|h| h.normal.dot(y) <= h.offset + tol_coeff * (1.0 + h.offset.abs()))
}

fn objective_value(kind: ObjectiveKind, shift: &DVector<f64>, y: &DVector<f64>) -> f64 {
    eval_objective(kind, &(y - shift))
}

// ---------------------------------------------------------------------------
// Face enumeration
// ---------------------------------------------------------------------------

enum Model {
    Quadratic(DMatrix<f64>),
    Linear(DVector<f64>),
    Smooth,
}

fn model_for(kind: ObjectiveKind, dim: usize) -> Model {
    match kind {
        ObjectiveKind::Sphere => Model::Quadratic(DMatrix::identity(dim, dim)),
        ObjectiveKind::SeparableEllipsoid => {
            Model::Quadratic(DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
                graded(1e6, i, dim)
            })))
        }
        ObjectiveKind::Discus => {
            Model::Quadratic(DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
                if i == 0 {
                    1e6
                } else {
                    1.0
                }
            })))
        }
        ObjectiveKind::BentCigar => {
            Model::Quadratic(DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
                if i == 0 {
                    1.0
                } else {
                    1e6
                }
            })))
        }
        ObjectiveKind::RotatedEllipsoid => {
            let rot = rotation_for(dim);
            let weights =
                DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| graded(1e6, i, dim)));
            Model::Quadratic(rot.transpose() * weights * rot)
        }
        ObjectiveKind::LinearSlope => {
            Model::Linear(DVector::from_fn(dim, |i, _| graded(10.0, i, dim)))
        }
        ObjectiveKind::DifferentPowers => Model::Smooth,
        ObjectiveKind::Rastrigin => Model::Smooth,
    }
}

fn enumerate_faces(
    kind: ObjectiveKind,
    shift: &DVector<f64>,
    halfspaces: &[Halfspace],
    interior: &DVector<f64>,
    dim: usize,
) -> (f64, DVector<f64>) {
    let model = model_for(kind, dim);
    let mut best_f = objective_value(kind, shift, interior);
    let mut best_y = interior.clone();

    let rows = halfspaces.len();
    for k in 0..=dim.min(rows) {
        for_each_combination(rows, k, &mut |subset| {
            if let Some(y) = face_candidate(kind, shift, halfspaces, subset, dim, &model) {
                if is_feasible(halfspaces, &y, 1e-10) {
                    let f = objective_value(kind, shift, &y);
                    if f < best_f {
                        best_f = f;
                        best_y = y;
                    }
                }
            }
        });
    }
    (best_f, best_y)
}

/// Exact minimizer of the objective on the affine hull of the face defined
/// by `subset`, or `None` when the face is degenerate or the restriction
/// has no bounded stationary point.
fn face_candidate(
    kind: ObjectiveKind,
    shift: &DVector<f64>,
    halfspaces: &[Halfspace],
    subset: &[usize],
    dim: usize,
    model: &Model,
) -> Option<DVector<f64>> {
    let k = subset.len();
    if k == 0 {
        let z = DMatrix::identity(dim, dim);
        return minimize_on_affine(kind, shift, &DVector::zeros(dim), Some(&z), model);
    }

    let mut n_s = DMatrix::zeros(k, dim);
    let mut o_s = DVector::zeros(k);
    for (row, &idx) in subset.iter().enumerate() {
        for j in 0..dim {
            n_s[(row, j)] = halfspaces[idx].normal[j];
        }
        o_s[row] = halfspaces[idx].offset;
    }
    // Skip dependent subsets; their affine hulls repeat elsewhere.
    let svd = n_s.clone().svd(false, false);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * sigma_max.max(1e-300))
        .count();
    if rank < k {
        return None;
    }

    let y_p = min_norm_solution(&n_s, &o_s).ok()?;
    if k == dim {
        return Some(y_p);
    }
    let basis = match orthonormal_null_space_basis(&n_s, 1e-10) {
        Ok(b) => b,
        Err(NumericsError::EmptyNullSpace) => return Some(y_p),
        Err(_) => return None,
    };
    minimize_on_affine(kind, shift, &y_p, Some(&basis.basis), model)
}

/// Minimizes the objective over `{y_p + Z r}`.
fn minimize_on_affine(
    kind: ObjectiveKind,
    shift: &DVector<f64>,
    y_p: &DVector<f64>,
    z: Option<&DMatrix<f64>>,
    model: &Model,
) -> Option<DVector<f64>> {
    let z = z?;
    match model {
        Model::Quadratic(q) => {
            let zq = z.transpose() * q;
            let mat = &zq * z;
            let rhs = &zq * (shift - y_p);
            let r = mat
                .clone()
                .cholesky()
                .map(|ch| ch.solve(&rhs))
                .or_else(|| mat.lu().solve(&rhs))?;
            Some(y_p + z * r)
        }
        Model::Linear(grad) => {
            let restricted = z.transpose() * grad;
            if restricted.amax() <= 1e-12 * (1.0 + grad.amax()) {
                Some(y_p.clone())
            } else {
                None
            }
        }
        Model::Smooth => newton_on_affine(kind, shift, y_p, z),
    }
}

/// Damped Newton for smooth convex objectives restricted to an affine
/// subspace (used by the sum-of-different-powers family).
fn newton_on_affine(
    kind: ObjectiveKind,
    shift: &DVector<f64>,
    y_p: &DVector<f64>,
    z: &DMatrix<f64>,
) -> Option<DVector<f64>> {
    let sub_dim = z.ncols();
    let mut r = DVector::zeros(sub_dim);
    let mut f = objective_value(kind, shift, &(y_p + z * &r));
    for _ in 0..200 {
        let y = y_p + z * &r;
        let t = &y - shift;
        let grad_y = objective_gradient(kind, &t);
        let grad_r = z.transpose() * &grad_y;
        if grad_r.amax() <= 1e-13 * (1.0 + f.abs()) {
            break;
        }
        let hess_diag = smooth_hessian_diagonal(kind, &t);
        let mut hess_r = DMatrix::zeros(sub_dim, sub_dim);
        for a in 0..sub_dim {
            for b in 0..sub_dim {
                let mut sum = 0.0;
                for i in 0..t.len() {
                    sum += z[(i, a)] * hess_diag[i] * z[(i, b)];
                }
                hess_r[(a, b)] = sum;
            }
        }
        for a in 0..sub_dim {
            hess_r[(a, a)] += 1e-12;
        }
        let step = hess_r
            .cholesky()
            .map(|ch| ch.solve(&(-&grad_r)))
            .unwrap_or_else(|| -&grad_r);

        // Backtracking line search.
        let mut alpha = 1.0;
        let mut advanced = false;
        for _ in 0..60 {
            let cand = &r + &step * alpha;
            let fc = objective_value(kind, shift, &(y_p + z * &cand));
            if fc < f {
                r = cand;
                f = fc;
                advanced = true;
                break;
            }
            alpha *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    Some(y_p + z * &r)
}

fn smooth_hessian_diagonal(kind: ObjectiveKind, t: &DVector<f64>) -> DVector<f64> {
    let d = t.len();
    match kind {
        ObjectiveKind::DifferentPowers => DVector::from_fn(d, |i, _| {
            let p = 2.0 + 4.0 * super::power_fraction(i, d);
            p * (p - 1.0) * t[i].abs().powf(p - 2.0)
        }),
        ObjectiveKind::Rastrigin => DVector::from_fn(d, |i, _| {
            let two_pi = 2.0 * std::f64::consts::PI;
            2.0 + 10.0 * two_pi * two_pi * (two_pi * t[i]).cos()
        }),
        _ => DVector::from_element(d, 2.0),
    }
}

fn for_each_combination(n: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == 0 {
        visit(&[]);
        return;
    }
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Multi-start projected gradient (reference path)
// ---------------------------------------------------------------------------

fn multistart(
    kind: ObjectiveKind,
    shift: &DVector<f64>,
    halfspaces: &[Halfspace],
    interior: &DVector<f64>,
    seed: u64,
    starts: usize,
    iters: usize,
) -> (f64, DVector<f64>) {
    let dim = shift.len();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut best_y = interior.clone();
    let mut best_f = objective_value(kind, shift, interior);
    for _ in 0..starts {
        let raw = DVector::from_fn(dim, |_, _| rng.random_range(-5.0..5.0));
        let start = feasible_toward(halfspaces, interior, &raw);
        let y = projected_gradient(kind, shift, halfspaces, &start, iters);
        let f = objective_value(kind, shift, &y);
        if f < best_f && is_feasible(halfspaces, &y, 1e-9) {
            best_f = f;
            best_y = y;
        }
    }
    (best_f, best_y)
}

/// Pulls `target` toward a strictly feasible anchor until it enters the
/// polytope.
fn feasible_toward(
    halfspaces: &[Halfspace],
    anchor: &DVector<f64>,
    target: &DVector<f64>,
) -> DVector<f64> {
    if is_feasible(halfspaces, target, 0.0) {
        return target.clone();
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let cand = anchor + (target - anchor) * mid;
        if is_feasible(halfspaces, &cand, 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    anchor + (target - anchor) * (lo * 0.95)
}

fn projected_gradient(
    kind: ObjectiveKind,
    shift: &DVector<f64>,
    halfspaces: &[Halfspace],
    start: &DVector<f64>,
    max_iters: usize,
) -> DVector<f64> {
    let mut y = start.clone();
    let mut f = objective_value(kind, shift, &y);
    let mut step = 0.5;
    for _ in 0..max_iters {
        let grad = objective_gradient(kind, &(&y - shift));
        let mut t = step;
        let mut advanced = false;
        for _ in 0..40 {
            let cand = project_dykstra(halfspaces, &(&y - &grad * t), 60);
            let fc = objective_value(kind, shift, &cand);
            if fc < f - 1e-15 * (1.0 + f.abs()) {
                let moved = (&cand - &y).norm();
                y = cand;
                f = fc;
                step = (t * 2.0).min(1e3);
                advanced = true;
                if moved <= 1e-13 * (1.0 + y.norm()) {
                    return y;
                }
                break;
            }
            t *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    y
}

/// Cyclic Dykstra projection onto the halfspace intersection.
fn project_dykstra(halfspaces: &[Halfspace], y0: &DVector<f64>, sweeps: usize) -> DVector<f64> {
    let mut y = y0.clone();
    let mut corrections = vec![DVector::zeros(y0.len()); halfspaces.len()];
    for _ in 0..sweeps {
        for (i, h) in halfspaces.iter().enumerate() {
            let v = &y + &corrections[i];
            let denom = h.normal.norm_squared();
            let excess = (h.normal.dot(&v) - h.offset) / denom;
            let projected = if excess > 0.0 {
                &v - &h.normal * excess
            } else {
                v.clone()
            };
            corrections[i] = &v - &projected;
            y = projected;
        }
    }
    y
}

/// After a gradient search, solve exactly on the face the solution sits on.
fn polish_on_active_face(
    kind: ObjectiveKind,
    shift: &DVector<f64>,
    halfspaces: &[Halfspace],
    f: f64,
    y: DVector<f64>,
) -> (f64, DVector<f64>) {
    let dim = y.len();
    let active: Vec<usize> = halfspaces
        .iter()
        .enumerate()
        .filter(|(_, h)| (h.normal.dot(&y) - h.offset).abs() <= 1e-6 * (1.0 + h.offset.abs()))
        .map(|(i, _)| i)
        .collect();
    if active.is_empty() || active.len() > dim {
        return (f, y);
    }
    let model = model_for(kind, dim);
    if let Some(candidate) = face_candidate(kind, shift, halfspaces, &active, dim, &model) {
        if is_feasible(halfspaces, &candidate, 1e-10) {
            let fc = objective_value(kind, shift, &candidate);
            if fc < f {
                return (fc, candidate);
            }
        }
    }
    (f, y)
}
