//! Benchmark problem generators: the Klee-Minty cube and randomly
//! constrained instances of eight standard test objectives.

mod optimum;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::constraint_approx::{preprocess_blackbox_problem, ConstraintApproxError, ConstraintFn};
use crate::standard_form::{
    back_transform, transform_nonneg_inequalities, Objective, ObjectiveJson, ProblemJson,
    StandardFormProblem, TransformKind,
};

#[derive(Debug, Error)]
pub enum ProblemsError {
    #[error("dimension {0} outside the supported range 1..=15")]
    DimensionOutOfRange(usize),
    #[error("unknown objective kind `{0}`")]
    UnknownKind(String),
    #[error(transparent)]
    Preprocess(#[from] ConstraintApproxError),
    #[error("invalid problem document: {0}")]
    BadDocument(String),
}

/// The eight test objective families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Sphere,
    SeparableEllipsoid,
    LinearSlope,
    RotatedEllipsoid,
    Discus,
    BentCigar,
    DifferentPowers,
    Rastrigin,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 8] = [
        ObjectiveKind::Sphere,
        ObjectiveKind::SeparableEllipsoid,
        ObjectiveKind::LinearSlope,
        ObjectiveKind::RotatedEllipsoid,
        ObjectiveKind::Discus,
        ObjectiveKind::BentCigar,
        ObjectiveKind::DifferentPowers,
        ObjectiveKind::Rastrigin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Sphere => "sphere",
            ObjectiveKind::SeparableEllipsoid => "ellipsoid",
            ObjectiveKind::LinearSlope => "linear_slope",
            ObjectiveKind::RotatedEllipsoid => "rotated_ellipsoid",
            ObjectiveKind::Discus => "discus",
            ObjectiveKind::BentCigar => "bent_cigar",
            ObjectiveKind::DifferentPowers => "different_powers",
            ObjectiveKind::Rastrigin => "rastrigin",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ProblemsError> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| ProblemsError::UnknownKind(name.to_string()))
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, ObjectiveKind::Rastrigin)
    }
}

/// Exponent helper `base^((i-1)/(D-1))` with the 1-dimensional case mapping
/// to exponent zero.
fn graded(base: f64, index: usize, dim: usize) -> f64 {
    if dim <= 1 {
        1.0
    } else {
        base.powf(index as f64 / (dim - 1) as f64)
    }
}

/// Fixed seeded rotation used by the rotated ellipsoid, one per dimension.
fn rotation_for(dim: usize) -> DMatrix<f64> {
    static CACHE: OnceLock<Mutex<HashMap<usize, DMatrix<f64>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("rotation cache poisoned");
    guard
        .entry(dim)
        .or_insert_with(|| {
            let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_0C0A ^ dim as u64);
            let mut gauss = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    gauss[(i, j)] = rng.sample::<f64, _>(StandardNormal);
                }
            }
            let qr = gauss.qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..dim {
                if r[(j, j)] < 0.0 {
                    for i in 0..dim {
                        q[(i, j)] = -q[(i, j)];
                    }
                }
            }
            q
        })
        .clone()
}

/// Evaluates one of the builtin objectives at `x` (no shift applied).
pub fn eval_objective(kind: ObjectiveKind, x: &DVector<f64>) -> f64 {
    let d = x.len();
    match kind {
        ObjectiveKind::Sphere => x.norm_squared(),
        ObjectiveKind::SeparableEllipsoid => (0..d).map(|i| graded(1e6, i, d) * x[i] * x[i]).sum(),
        ObjectiveKind::LinearSlope => (0..d).map(|i| graded(10.0, i, d) * x[i]).sum(),
        ObjectiveKind::RotatedEllipsoid => {
            let rotated = rotation_for(d) * x;
            eval_objective(ObjectiveKind::SeparableEllipsoid, &rotated)
        }
        ObjectiveKind::Discus => 1e6 * x[0] * x[0] + (1..d).map(|i| x[i] * x[i]).sum::<f64>(),
        ObjectiveKind::BentCigar => x[0] * x[0] + 1e6 * (1..d).map(|i| x[i] * x[i]).sum::<f64>(),
        ObjectiveKind::DifferentPowers => (0..d)
            .map(|i| x[i].abs().powf(2.0 + 4.0 * power_fraction(i, d)))
            .sum(),
        ObjectiveKind::Rastrigin => {
            let cos_sum: f64 = x
                .iter()
                .map(|v| (2.0 * std::f64::consts::PI * v).cos())
                .sum();
            10.0 * (d as f64 - cos_sum) + x.norm_squared()
        }
    }
}

fn power_fraction(index: usize, dim: usize) -> f64 {
    if dim <= 1 {
        0.0
    } else {
        index as f64 / (dim - 1) as f64
    }
}

/// Analytic gradient of [`eval_objective`].
pub fn objective_gradient(kind: ObjectiveKind, x: &DVector<f64>) -> DVector<f64> {
    let d = x.len();
    match kind {
        ObjectiveKind::Sphere => x * 2.0,
        ObjectiveKind::SeparableEllipsoid => {
            DVector::from_fn(d, |i, _| 2.0 * graded(1e6, i, d) * x[i])
        }
        ObjectiveKind::LinearSlope => DVector::from_fn(d, |i, _| graded(10.0, i, d)),
        ObjectiveKind::RotatedEllipsoid => {
            let rot = rotation_for(d);
            let rx = &rot * x;
            let inner = DVector::from_fn(d, |i, _| 2.0 * graded(1e6, i, d) * rx[i]);
            rot.transpose() * inner
        }
        ObjectiveKind::Discus => {
            DVector::from_fn(d, |i, _| if i == 0 { 2e6 * x[0] } else { 2.0 * x[i] })
        }
        ObjectiveKind::BentCigar => {
            DVector::from_fn(d, |i, _| if i == 0 { 2.0 * x[0] } else { 2e6 * x[i] })
        }
        ObjectiveKind::DifferentPowers => DVector::from_fn(d, |i, _| {
            let p = 2.0 + 4.0 * power_fraction(i, d);
            p * x[i].abs().powf(p - 1.0) * x[i].signum()
        }),
        ObjectiveKind::Rastrigin => DVector::from_fn(d, |i, _| {
            let two_pi = 2.0 * std::f64::consts::PI;
            2.0 * x[i] + 10.0 * two_pi * (two_pi * x[i]).sin()
        }),
    }
}

/// Objective description an instance carries; [`ObjectiveSpec::build`]
/// produces the callable form.
#[derive(Debug, Clone)]
pub enum ObjectiveSpec {
    Builtin {
        kind: ObjectiveKind,
        shift: Option<DVector<f64>>,
    },
    Linear {
        coeffs: DVector<f64>,
    },
}

impl ObjectiveSpec {
    pub fn build(&self) -> Objective {
        match self {
            ObjectiveSpec::Builtin { kind, shift } => {
                let kind = *kind;
                let shift = shift.clone();
                Arc::new(move |y: &DVector<f64>| match &shift {
                    Some(s) => eval_objective(kind, &(y - s)),
                    None => eval_objective(kind, y),
                })
            }
            ObjectiveSpec::Linear { coeffs } => {
                let coeffs = coeffs.clone();
                Arc::new(move |y: &DVector<f64>| coeffs.dot(y))
            }
        }
    }

    fn to_json(&self) -> ObjectiveJson {
        match self {
            ObjectiveSpec::Builtin { kind, shift } => match shift {
                None => ObjectiveJson::Named(kind.name().to_string()),
                Some(s) => ObjectiveJson::Shifted {
                    kind: kind.name().to_string(),
                    shift: Some(s.iter().copied().collect()),
                },
            },
            ObjectiveSpec::Linear { coeffs } => ObjectiveJson::Linear {
                linear: coeffs.iter().copied().collect(),
            },
        }
    }
}

/// Resolves a document objective into a spec.
pub fn resolve_objective(json: &ObjectiveJson) -> Result<ObjectiveSpec, ProblemsError> {
    Ok(match json {
        ObjectiveJson::Named(name) => ObjectiveSpec::Builtin {
            kind: ObjectiveKind::from_name(name)?,
            shift: None,
        },
        ObjectiveJson::Shifted { kind, shift } => ObjectiveSpec::Builtin {
            kind: ObjectiveKind::from_name(kind)?,
            shift: shift.as_ref().map(|s| DVector::from_row_slice(s)),
        },
        ObjectiveJson::Linear { linear } => ObjectiveSpec::Linear {
            coeffs: DVector::from_row_slice(linear),
        },
    })
}

/// Linear inequality constraints `Wy <= c` in the original space.
#[derive(Debug, Clone)]
pub struct ConstraintData {
    pub w: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl ConstraintData {
    /// Black-box view: one call evaluates all constraints, feasible iff
    /// every component is `<= 0`.
    pub fn black_box(&self) -> ConstraintFn {
        let w = self.w.clone();
        let c = self.c.clone();
        Arc::new(move |y: &DVector<f64>| &w * y - &c)
    }
}

/// One benchmark problem: constraints, objective, and its (known or
/// reference) optimum.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub dim_original: usize,
    pub objective: ObjectiveSpec,
    pub constraints: ConstraintData,
    /// Box bounds; `None` means the problem natively has `y >= 0` and no
    /// upper bounds (slack-only transform).
    pub bounds: Option<(DVector<f64>, DVector<f64>)>,
    pub f_opt: f64,
    pub x_opt: Option<DVector<f64>>,
    /// True when `f_opt` is a best-known reference rather than a certified
    /// optimum (multimodal objectives).
    pub reference_only: bool,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn objective_fn(&self) -> Objective {
        self.objective.build()
    }

    /// Standard-form view of the instance, plus the constraint-evaluation
    /// cost spent building it.
    ///
    /// Natively non-negative problems transform directly (no constraint
    /// evaluations). Box-bounded problems expose their constraints only as
    /// a black box, so the full recovery pipeline runs.
    pub fn to_standard_form<R: Rng>(
        &self,
        rng: &mut R,
    ) -> Result<(StandardFormProblem, u64), ProblemsError> {
        match &self.bounds {
            None => {
                let (a, b) =
                    transform_nonneg_inequalities(&self.constraints.w, &self.constraints.c);
                let d = self.dim_original;
                let k = self.constraints.w.nrows();
                let inner = self.objective_fn();
                let objective: Objective = Arc::new(move |x: &DVector<f64>| {
                    let y = back_transform(x, d, k, TransformKind::SlackOnly)
                        .expect("standard-form vector has the transformed length");
                    inner(&y)
                });
                Ok((
                    StandardFormProblem {
                        a,
                        b,
                        objective,
                        orig_dim: d,
                        orig_ineq_count: k,
                        transform_kind: TransformKind::SlackOnly,
                        constraint_evals_spent: 0,
                    },
                    0,
                ))
            }
            Some((lower, upper)) => {
                let (problem, cost) = preprocess_blackbox_problem(
                    self.objective_fn(),
                    self.constraints.black_box(),
                    lower,
                    upper,
                    rng,
                )?;
                Ok((problem, cost))
            }
        }
    }

    pub fn to_json(&self) -> ProblemJson {
        let rows: Vec<Vec<f64>> = (0..self.constraints.w.nrows())
            .map(|i| self.constraints.w.row(i).iter().copied().collect())
            .collect();
        let (lower, upper, native) = match &self.bounds {
            Some((lo, hi)) => (
                lo.iter().copied().collect(),
                hi.iter().copied().collect(),
                None,
            ),
            None => (vec![0.0; self.dim_original], Vec::new(), Some(true)),
        };
        ProblemJson {
            w_ineq: rows,
            c_ineq: self.constraints.c.iter().copied().collect(),
            w_eq: Vec::new(),
            c_eq: Vec::new(),
            lower,
            upper,
            objective: self.objective.to_json(),
            f_opt: Some(self.f_opt),
            reference_only: Some(self.reference_only),
            name: Some(self.name.clone()),
            seed: Some(self.seed),
            native_nonneg: native,
        }
    }

    pub fn from_json(doc: &ProblemJson) -> Result<Self, ProblemsError> {
        if !doc.w_eq.is_empty() {
            return Err(ProblemsError::BadDocument(
                "equality constraints are not supported for instances".into(),
            ));
        }
        let dim = doc.lower.len();
        let w = DMatrix::from_fn(doc.w_ineq.len(), dim, |i, j| doc.w_ineq[i][j]);
        let c = DVector::from_row_slice(&doc.c_ineq);
        let native = doc.native_nonneg.unwrap_or(false);
        let bounds = if native {
            None
        } else {
            Some((
                DVector::from_row_slice(&doc.lower),
                DVector::from_row_slice(&doc.upper),
            ))
        };
        Ok(ProblemInstance {
            name: doc.name.clone().unwrap_or_else(|| "problem".into()),
            dim_original: dim,
            objective: resolve_objective(&doc.objective)?,
            constraints: ConstraintData { w, c },
            bounds,
            f_opt: doc.f_opt.unwrap_or(f64::NAN),
            x_opt: None,
            reference_only: doc.reference_only.unwrap_or(false),
            seed: doc.seed.unwrap_or(0),
        })
    }
}

/// Independent cross-check of a stored optimum: multi-start
/// projected-gradient refinement over the instance's polytope. Returns
/// `None` for instances without box bounds or with non-builtin objectives.
pub fn refine_optimum(
    instance: &ProblemInstance,
    starts: usize,
    iters: usize,
    seed: u64,
) -> Option<f64> {
    let (kind, shift) = match &instance.objective {
        ObjectiveSpec::Builtin { kind, shift } => (
            *kind,
            shift
                .clone()
                .unwrap_or_else(|| DVector::zeros(instance.dim_original)),
        ),
        ObjectiveSpec::Linear { .. } => return None,
    };
    let (lower, upper) = instance.bounds.as_ref()?;
    optimum::multistart_reference(
        kind,
        &shift,
        &instance.constraints.w,
        &instance.constraints.c,
        lower,
        upper,
        seed,
        starts,
        iters,
    )
}

/// The n-dimensional Klee-Minty cube as a minimization problem.
///
/// Constraint row `i` (1-based) has coefficients `2^(i-j+1)` for `j < i`,
/// `1` at `j = i`, with right-hand side `5^i`; variables are natively
/// non-negative. The classic objective is maximized, so the instance stores
/// its negation: `f_opt = -5^n` at `x_opt = (0, ..., 0, 5^n)`.
pub fn klee_minty(n: usize) -> Result<ProblemInstance, ProblemsError> {
    if !(1..=15).contains(&n) {
        return Err(ProblemsError::DimensionOutOfRange(n));
    }
    let mut w = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    for i in 0..n {
        for j in 0..i {
            w[(i, j)] = 2f64.powi((i - j + 1) as i32);
        }
        w[(i, i)] = 1.0;
        c[i] = 5f64.powi((i + 1) as i32);
    }
    let coeffs = DVector::from_fn(n, |j, _| -(2f64.powi((n - 1 - j) as i32)));
    let f_opt = -5f64.powi(n as i32);
    let mut x_opt = DVector::zeros(n);
    x_opt[n - 1] = 5f64.powi(n as i32);
    Ok(ProblemInstance {
        name: "kleeminty".into(),
        dim_original: n,
        objective: ObjectiveSpec::Linear { coeffs },
        constraints: ConstraintData { w, c },
        bounds: None,
        f_opt,
        x_opt: Some(x_opt),
        reference_only: false,
        seed: 0,
    })
}

/// A randomly constrained instance of a builtin objective.
///
/// `m` constraint gradients are drawn from `N(0, I)`; the right-hand sides
/// are shifted so a designated interior point is strictly feasible with
/// slack 1. Box bounds are `[-5, 5]` per coordinate and the objective
/// argument is shifted by a seeded uniform draw from `[-2, 2]`. The stored
/// `f_opt` comes from an exact face-enumeration solver for the convex
/// objectives and from seeded multi-start local search for the multimodal
/// one (flagged `reference_only`).
///
/// Draw order from the instance seed: the `m * dim` gradient entries
/// (row-major), `dim` normals for the interior point (clamped to
/// `[-4, 4]`), then `dim` uniforms for the shift.
pub fn constrained_synthetic(
    kind: ObjectiveKind,
    dim: usize,
    m: usize,
    seed: u64,
) -> ProblemInstance {
    assert!(m >= 1, "need at least one constraint");
    assert!(dim >= 1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(m, dim);
    for i in 0..m {
        for j in 0..dim {
            w[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let interior = DVector::from_fn(dim, |_, _| {
        rng.sample::<f64, _>(StandardNormal).clamp(-4.0, 4.0)
    });
    let c = &w * &interior + DVector::from_element(m, 1.0);
    let shift = DVector::from_fn(dim, |_, _| rng.random_range(-2.0..=2.0));
    let lower = DVector::from_element(dim, -5.0);
    let upper = DVector::from_element(dim, 5.0);

    let objective = ObjectiveSpec::Builtin {
        kind,
        shift: Some(shift.clone()),
    };
    let (f_opt, x_opt, reference_only) = optimum::solve(
        kind,
        &shift,
        &w,
        &c,
        &lower,
        &upper,
        &interior,
        seed ^ 0x9E37_79B9_7F4A_7C15,
    );

    ProblemInstance {
        name: format!("{}_m{}", kind.name(), m),
        dim_original: dim,
        objective,
        constraints: ConstraintData { w, c },
        bounds: Some((lower, upper)),
        f_opt,
        x_opt,
        reference_only,
        seed,
    }
}
