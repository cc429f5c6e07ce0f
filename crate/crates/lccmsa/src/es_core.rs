//! The generational loop of the linear-constraint evolution strategy.
//!
//! Search happens inside the null space of the constraint matrix: mutations
//! `z = sigma * B * s` cannot violate `Ax = b`, and offspring that leave the
//! positive orthant are repaired by projection. Step sizes self-adapt
//! through a log-normal factor per offspring, and the covariance of the
//! null-space mutations is a running average of the selected `s sᵀ` outer
//! products, regularized so its condition number stays below a threshold.
//!
//! The objective is only ever evaluated at feasible points. An internal
//! guard checks every query against the shared feasibility tolerances and
//! reports the number of violations (expected: zero) in the result.
//!
//! Reproducibility: runs are driven by a caller-supplied RNG (the benchmark
//! harness uses `ChaCha12Rng` seeded from a 64-bit value). The draw order
//! is fixed: `N` standard normals for the initial centroid randomization,
//! then per offspring one normal for the step-size factor followed by `N`
//! normals for the null-space direction; each repair draws one uniform
//! index per attempt.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility;
use crate::numerics::{
    self, min_norm_solution, orthonormal_null_space_basis, NullSpaceBasis, NumericsError,
};
use crate::projection::{
    init_reference_points_with_radius, repair_to_orthant, ProjectionError, ReferencePointSet,
};
use crate::standard_form::{contract_split_variables, StandardFormProblem, TransformKind};

#[derive(Debug, Error)]
pub enum EsError {
    #[error("the null space of A is empty; no search directions exist")]
    EmptyNullSpace,
    #[error("the feasible region is empty")]
    InfeasibleRegion,
    #[error("covariance matrix degenerated to zero")]
    DegenerateCovariance,
    #[error("invalid strategy parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Numerics(NumericsError),
    #[error(transparent)]
    Projection(ProjectionError),
}

impl From<NumericsError> for EsError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::EmptyNullSpace => EsError::EmptyNullSpace,
            NumericsError::InconsistentSystem { .. } => EsError::InfeasibleRegion,
            other => EsError::Numerics(other),
        }
    }
}

impl From<ProjectionError> for EsError {
    fn from(e: ProjectionError) -> Self {
        match e {
            ProjectionError::InfeasibleRegion => EsError::InfeasibleRegion,
            other => EsError::Projection(other),
        }
    }
}

/// One candidate solution: objective value, parameter vector, its mutation
/// in parameter space (`z`) and in the null space (`s`), and the step size
/// that produced it.
#[derive(Debug, Clone)]
pub struct Individual {
    pub f_value: f64,
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
    pub sigma: f64,
}

/// Resolved strategy parameters.
///
/// [`StrategyParams::table_defaults`] fills in the standard settings for a
/// problem of standard-form dimension `d` with null-space dimension `n`:
/// `lambda = 4d`, `mu = lambda/4`, `sigma_init = 1/sqrt(d)`,
/// `tau = 1/sqrt(2n)`, `tau_c = 1 + n(n-1)/(2 mu)`, condition threshold
/// `1e12`, `delta_window = 10`, `bsf_stall = 50n`,
/// `max_generations = 10_000`, `sigma_stop = 1e-6`,
/// `eps_abs = eps_rel = 1e-9`, `ref_point_count = 10n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyParams {
    pub lambda: usize,
    pub mu: usize,
    pub sigma_init: f64,
    pub tau: f64,
    pub tau_c: f64,
    /// Condition-number threshold `t` for covariance regularization.
    pub cond_limit: f64,
    /// Generation lag `G` for the centroid-movement stopping tests.
    pub delta_window: usize,
    /// Stop after this many generations without a best-so-far update.
    pub bsf_stall: usize,
    pub max_generations: usize,
    pub sigma_stop: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub ref_point_count: usize,
    /// Combined objective + constraint evaluation budget; `None` = unlimited.
    pub max_total_evals: Option<u64>,
    /// Recompute the normalized covariance square root every this many
    /// generations (1 = every generation).
    pub sqrt_stride: usize,
}

impl StrategyParams {
    pub fn table_defaults(d: usize, n: usize) -> Self {
        let lambda = 4 * d;
        let mu = (lambda / 4).max(1);
        Self {
            lambda,
            mu,
            sigma_init: 1.0 / (d as f64).sqrt(),
            tau: 1.0 / (2.0 * n as f64).sqrt(),
            tau_c: 1.0 + (n * n.saturating_sub(1)) as f64 / (2.0 * mu as f64),
            cond_limit: 1e12,
            delta_window: 10,
            bsf_stall: 50 * n,
            max_generations: 10_000,
            sigma_stop: 1e-6,
            eps_abs: 1e-9,
            eps_rel: 1e-9,
            ref_point_count: 10 * n,
            max_total_evals: None,
            sqrt_stride: 1,
        }
    }

    pub fn resolve(d: usize, n: usize, overrides: &ParamOverrides) -> Self {
        let mut p = Self::table_defaults(d, n);
        overrides.apply(&mut p);
        p
    }

    fn validate(&self) -> Result<(), EsError> {
        if self.mu < 1 || self.mu >= self.lambda {
            return Err(EsError::InvalidParams(format!(
                "need 1 <= mu < lambda, got mu={} lambda={}",
                self.mu, self.lambda
            )));
        }
        if self.cond_limit <= 1.0 {
            return Err(EsError::InvalidParams(
                "condition threshold must exceed 1".into(),
            ));
        }
        if self.sigma_init <= 0.0
            || self.sigma_stop <= 0.0
            || self.eps_abs <= 0.0
            || self.eps_rel <= 0.0
        {
            return Err(EsError::InvalidParams(
                "tolerances and step sizes must be positive".into(),
            ));
        }
        if self.sqrt_stride == 0 {
            return Err(EsError::InvalidParams("sqrt_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Optional overrides for the table defaults, deserializable from run
/// configurations.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub lambda: Option<usize>,
    pub mu: Option<usize>,
    pub sigma_init: Option<f64>,
    pub tau: Option<f64>,
    pub tau_c: Option<f64>,
    pub cond_limit: Option<f64>,
    pub delta_window: Option<usize>,
    pub bsf_stall: Option<usize>,
    pub max_generations: Option<usize>,
    pub sigma_stop: Option<f64>,
    pub eps_abs: Option<f64>,
    pub eps_rel: Option<f64>,
    pub ref_point_count: Option<usize>,
    pub max_total_evals: Option<u64>,
    pub sqrt_stride: Option<usize>,
}

impl ParamOverrides {
    fn apply(&self, p: &mut StrategyParams) {
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    p.$field = v;
                }
            };
        }
        set!(lambda);
        set!(mu);
        set!(sigma_init);
        set!(tau);
        set!(tau_c);
        set!(cond_limit);
        set!(delta_window);
        set!(bsf_stall);
        set!(max_generations);
        set!(sigma_stop);
        set!(eps_abs);
        set!(eps_rel);
        set!(ref_point_count);
        set!(sqrt_stride);
        if self.max_total_evals.is_some() {
            p.max_total_evals = self.max_total_evals;
        }
    }
}

/// Why a run stopped; exactly one clause of the termination test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    MaxGenerations,
    SigmaFloor,
    AbsDelta,
    RelDelta,
    BsfStall,
    Budget,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TerminationReason::MaxGenerations => "max_generations",
            TerminationReason::SigmaFloor => "sigma_floor",
            TerminationReason::AbsDelta => "abs_delta",
            TerminationReason::RelDelta => "rel_delta",
            TerminationReason::BsfStall => "bsf_stall",
            TerminationReason::Budget => "budget",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TerminationReason {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "max_generations" => TerminationReason::MaxGenerations,
            "sigma_floor" => TerminationReason::SigmaFloor,
            "abs_delta" => TerminationReason::AbsDelta,
            "rel_delta" => TerminationReason::RelDelta,
            "bsf_stall" => TerminationReason::BsfStall,
            "budget" => TerminationReason::Budget,
            other => return Err(format!("unknown termination reason `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub objective: u64,
    pub constraint: u64,
}

impl EvalCounts {
    pub fn total(&self) -> u64 {
        self.objective + self.constraint
    }
}

/// Mutable per-run state of the generational loop.
#[derive(Debug, Clone)]
pub struct EsState {
    pub centroid: DVector<f64>,
    pub sigma: f64,
    pub c: DMatrix<f64>,
    pub generation: usize,
    pub bsf: Individual,
    pub g_bsf: usize,
    /// Ring of the last `delta_window + 1` centroids, oldest first.
    pub centroid_history: VecDeque<DVector<f64>>,
}

/// Per-generation trace row for dynamics plots.
#[derive(Debug, Clone, Copy)]
pub struct GenerationTrace {
    pub generation: usize,
    pub sigma: f64,
    pub best_f: f64,
    pub bsf_f: f64,
    pub evals_objective: u64,
    pub evals_constraint: u64,
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub best: Individual,
    pub termination: TerminationReason,
    pub generations: u64,
    pub eval_counts: EvalCounts,
    /// Best-so-far trajectory: (total evaluations, best objective value),
    /// recorded at every improvement.
    pub history: Vec<(u64, f64)>,
    /// Queries that violated the feasibility tolerances (must stay zero).
    pub contract_violations: u64,
    /// The resolved parameters the run actually used.
    pub params: StrategyParams,
}

// ---------------------------------------------------------------------------
// Covariance regularization
// ---------------------------------------------------------------------------

/// The diagonal shift `r` that caps the condition number of
/// `(sqrt(C) + rI)²` at `t`, from the closed form
/// `r = sqrt(l_max)/t - sqrt(l_min) + sqrt(l_max/t² + l_max/t
/// - 2 sqrt(l_min l_max)/t)`.
///
/// Returns 0 when the condition number is already within the threshold.
/// The closed form drops a `t - 1 ~ t` term, so the capped condition
/// number can overshoot `t` by up to about 2% for small `t`.
pub fn regularization_shift(lambda_min: f64, lambda_max: f64, t: f64) -> f64 {
    assert!(lambda_min >= 0.0 && lambda_max >= lambda_min);
    assert!(t > 1.0);
    if lambda_max <= t * lambda_min {
        return 0.0;
    }
    let root_max = lambda_max.sqrt();
    let inner = (lambda_max / (t * t) + lambda_max / t
        - 2.0 * (lambda_min * lambda_max).sqrt() / t)
        .max(0.0);
    (root_max / t - lambda_min.sqrt() + inner.sqrt()).max(0.0)
}

/// Volume-normalized square root of the covariance matrix.
///
/// Symmetrizes `C`, takes the symmetric square root through its
/// eigendecomposition (negative round-off eigenvalues clamp to zero), adds
/// the regularization shift when the condition number exceeds `t`, and
/// scales by `det^{-1/N}` so the result has unit determinant.
pub fn compute_sqrt_c_normalized(c: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>, EsError> {
    let n = c.nrows();
    assert!(n >= 1);
    let sym = (c + c.transpose()) * 0.5;
    let (u, raw_values) = numerics::symmetric_eigendecomposition(&sym)?;
    let values: Vec<f64> = raw_values.iter().map(|&v| v.max(0.0)).collect();
    let lambda_min = values[0];
    let lambda_max = values[n - 1];
    if lambda_max <= 0.0 {
        return Err(EsError::DegenerateCovariance);
    }
    let needs_shift = lambda_min <= 0.0 || lambda_max / lambda_min > t;
    let r = if needs_shift {
        regularization_shift(lambda_min, lambda_max, t)
    } else {
        0.0
    };

    let sqrt_diag = DVector::from_fn(n, |i, _| values[i].sqrt());
    let mut m_r = &u * DMatrix::from_diagonal(&sqrt_diag) * u.transpose();
    for i in 0..n {
        m_r[(i, i)] += r;
    }
    // det(M_r) = prod(sqrt(l_i) + r); normalize via log-sums for stability.
    let log_det: f64 = sqrt_diag.iter().map(|s| (s + r).ln()).sum();
    let factor = (-log_det / n as f64).exp();
    Ok(m_r * factor)
}

// ---------------------------------------------------------------------------
// Offspring
// ---------------------------------------------------------------------------

/// Draws one offspring: log-normal step size, null-space direction
/// `s = sqrt_c * xi`, parameter-space mutation `z = sigma * B * s`.
/// The objective value is left as a NaN sentinel.
pub fn sample_offspring<R: Rng>(
    centroid: &DVector<f64>,
    sigma: f64,
    tau: f64,
    sqrt_c: &DMatrix<f64>,
    basis: &NullSpaceBasis,
    rng: &mut R,
) -> Individual {
    let n = basis.null_dim();
    let step: f64 = rng.sample::<f64, _>(StandardNormal);
    let sigma_l = sigma * (tau * step).exp();
    let xi = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let s = sqrt_c * xi;
    let z = (&basis.basis * &s) * sigma_l;
    let x = centroid + &z;
    Individual {
        f_value: f64::NAN,
        x,
        z,
        s,
        sigma: sigma_l,
    }
}

/// Repairs an offspring that left the positive orthant, then recomputes its
/// mutation vectors so the tuple stays consistent:
/// `z = x_repaired - centroid`, `s = Bᵀ z / sigma`.
pub fn repair_individual<R: Rng>(
    ind: Individual,
    centroid: &DVector<f64>,
    basis: &NullSpaceBasis,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    set: &ReferencePointSet,
    rng: &mut R,
) -> Result<Individual, EsError> {
    if ind.x.min() >= 0.0 {
        return Ok(ind);
    }
    let x = repair_to_orthant(&ind.x, a, b, set, rng)?;
    let z = &x - centroid;
    let s = basis.basis.transpose() * &z / ind.sigma;
    Ok(Individual {
        f_value: ind.f_value,
        x,
        z,
        s,
        sigma: ind.sigma,
    })
}

/// Means over the `mu` best offspring (ranked by objective value, ties
/// broken by sampling index).
#[derive(Debug, Clone)]
pub struct Recombined {
    /// Mean of the selected parameter vectors; equals centroid + mean_z in
    /// exact arithmetic but stays a mean of non-negative vectors in floats.
    pub mean_x: DVector<f64>,
    pub mean_z: DVector<f64>,
    pub mean_s: DVector<f64>,
    pub mean_sigma: f64,
    pub mean_ss_t: DMatrix<f64>,
    /// Sampling indices of the selected offspring, in rank order.
    pub selected: Vec<usize>,
}

pub fn rank_and_recombine(offspring: &[Individual], mu: usize) -> Recombined {
    assert!(mu >= 1 && mu <= offspring.len());
    let d = offspring[0].x.len();
    let n = offspring[0].s.len();
    let mut order: Vec<usize> = (0..offspring.len()).collect();
    order.sort_by(|&i, &j| {
        offspring[i]
            .f_value
            .total_cmp(&offspring[j].f_value)
            .then(i.cmp(&j))
    });
    let selected: Vec<usize> = order[..mu].to_vec();

    let mut mean_x = DVector::zeros(d);
    let mut mean_z = DVector::zeros(d);
    let mut mean_s = DVector::zeros(n);
    let mut mean_sigma = 0.0;
    let mut mean_ss_t = DMatrix::zeros(n, n);
    for &idx in &selected {
        let ind = &offspring[idx];
        mean_x += &ind.x;
        mean_z += &ind.z;
        mean_s += &ind.s;
        mean_sigma += ind.sigma;
        mean_ss_t += &ind.s * ind.s.transpose();
    }
    let inv = 1.0 / mu as f64;
    Recombined {
        mean_x: mean_x * inv,
        mean_z: mean_z * inv,
        mean_s: mean_s * inv,
        mean_sigma: mean_sigma * inv,
        mean_ss_t: mean_ss_t * inv,
        selected,
    }
}

/// `C' = (1 - 1/tau_c) C + (1/tau_c) <s sᵀ>`.
pub fn update_covariance(c: &DMatrix<f64>, mean_ss_t: &DMatrix<f64>, tau_c: f64) -> DMatrix<f64> {
    assert!(tau_c >= 1.0);
    let keep = 1.0 - 1.0 / tau_c;
    c * keep + mean_ss_t / tau_c
}

/// First satisfied stopping clause, tested in a fixed order. The
/// centroid-movement clauses are inactive until `delta_window` generations
/// have passed, and the relative clause is skipped when the old centroid
/// has zero norm.
pub fn check_termination(
    state: &EsState,
    params: &StrategyParams,
    total_evals: u64,
) -> Option<TerminationReason> {
    let g = state.generation;
    if g > params.max_generations {
        return Some(TerminationReason::MaxGenerations);
    }
    if state.sigma < params.sigma_stop {
        return Some(TerminationReason::SigmaFloor);
    }
    if g >= params.delta_window && state.centroid_history.len() > params.delta_window {
        let old = &state.centroid_history[0];
        let current = &state.centroid;
        if (current - old).norm() < params.eps_abs {
            return Some(TerminationReason::AbsDelta);
        }
        let old_norm = old.norm();
        if old_norm > 0.0 && (current.norm() / old_norm - 1.0).abs() < params.eps_rel {
            return Some(TerminationReason::RelDelta);
        }
    }
    if g - state.g_bsf >= params.bsf_stall {
        return Some(TerminationReason::BsfStall);
    }
    if let Some(budget) = params.max_total_evals {
        if total_evals >= budget {
            return Some(TerminationReason::Budget);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// The run loop
// ---------------------------------------------------------------------------

/// Objective wrapper enforcing the interior-point contract: every query is
/// checked against the feasibility tolerances, counted, and folded into the
/// best-so-far history.
struct EvalGuard<'a> {
    problem: &'a StandardFormProblem,
    eq_tol: f64,
    objective_evals: u64,
    violations: u64,
    best_f: f64,
    history: Vec<(u64, f64)>,
}

impl<'a> EvalGuard<'a> {
    fn new(problem: &'a StandardFormProblem) -> Self {
        Self {
            problem,
            eq_tol: feasibility::equality_tol(&problem.b),
            objective_evals: 0,
            violations: 0,
            best_f: f64::INFINITY,
            history: Vec::new(),
        }
    }

    fn eval(&mut self, x: &DVector<f64>) -> f64 {
        let residual = feasibility::equality_residual(&self.problem.a, &self.problem.b, x);
        if residual > self.eq_tol || feasibility::min_component(x) < feasibility::NONNEG_TOL {
            self.violations += 1;
        }
        let f = (self.problem.objective)(x);
        self.objective_evals += 1;
        if f < self.best_f {
            self.best_f = f;
            self.history.push((self.total(), f));
        }
        f
    }

    fn total(&self) -> u64 {
        self.objective_evals + self.problem.constraint_evals_spent
    }

    fn counts(&self) -> EvalCounts {
        EvalCounts {
            objective: self.objective_evals,
            constraint: self.problem.constraint_evals_spent,
        }
    }
}

/// Runs the strategy on a standard-form problem with the table defaults
/// (adjusted by `overrides`) until a stopping clause fires.
pub fn optimize<R: Rng>(
    problem: &StandardFormProblem,
    overrides: &ParamOverrides,
    rng: &mut R,
) -> Result<OptResult, EsError> {
    optimize_with_trace(problem, overrides, rng, None)
}

/// [`optimize`] with an optional per-generation trace callback.
pub fn optimize_with_trace<R: Rng>(
    problem: &StandardFormProblem,
    overrides: &ParamOverrides,
    rng: &mut R,
    mut trace: Option<&mut dyn FnMut(&GenerationTrace)>,
) -> Result<OptResult, EsError> {
    let a = &problem.a;
    let b = &problem.b;
    let d = problem.dim();

    let rank_tol = numerics::DEFAULT_RANK_TOL;
    let basis = orthonormal_null_space_basis(a, rank_tol)?;
    let n = basis.null_dim();
    let params = StrategyParams::resolve(d, n, overrides);
    params.validate()?;

    // Inhomogeneous solution, reference points, centroid randomization.
    // The sampling radius for the reference points is widened to the scale
    // of the right-hand side: the minimum-norm seed can be much smaller
    // than the polyhedron, and reference points then miss its far vertices.
    let mut x0 = min_norm_solution(a, b)?;
    // Clean particular solution kept for re-centering drifting offspring
    // onto the manifold: x -> x_p + B Bᵀ (x - x_p).
    let x_particular = x0.clone();
    let recenter_threshold = 0.5 * feasibility::equality_tol(b);
    let split_threshold = 1.0 + b.amax();
    let radius = x0.norm().max(2.0 * b.amax()).max(1.0);
    let set = init_reference_points_with_radius(radius, params.ref_point_count.max(1), a, b, rng)?;
    let scale = {
        let norm = x0.norm();
        if norm == 0.0 {
            1.0
        } else {
            norm
        }
    };
    let xi = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    x0 += (&basis.basis * xi) * scale;
    if x0.min() < 0.0 {
        x0 = repair_to_orthant(&x0, a, b, &set, rng)?;
    }

    let mut guard = EvalGuard::new(problem);
    let f0 = guard.eval(&x0);
    let mut state = EsState {
        centroid: x0.clone(),
        sigma: params.sigma_init,
        c: DMatrix::identity(n, n),
        generation: 0,
        bsf: Individual {
            f_value: f0,
            x: x0.clone(),
            z: DVector::zeros(d),
            s: DVector::zeros(n),
            sigma: params.sigma_init,
        },
        g_bsf: 0,
        centroid_history: VecDeque::from([x0]),
    };

    let mut sqrt_c = compute_sqrt_c_normalized(&state.c, params.cond_limit)?;
    let mut offspring: Vec<Individual> = Vec::with_capacity(params.lambda);

    loop {
        if state.generation > 0 && state.generation.is_multiple_of(params.sqrt_stride) {
            match compute_sqrt_c_normalized(&state.c, params.cond_limit) {
                Ok(m) => sqrt_c = m,
                // All selected mutations can collapse onto one repaired
                // point (every eigenvalue exactly zero); restart the
                // covariance instead of aborting the run.
                Err(EsError::DegenerateCovariance) => {
                    state.c = DMatrix::identity(n, n);
                    sqrt_c = DMatrix::identity(n, n);
                }
                Err(other) => return Err(other),
            }
        }

        offspring.clear();
        let mut gen_best = f64::INFINITY;
        for _ in 0..params.lambda {
            let mut sampled = sample_offspring(
                &state.centroid,
                state.sigma,
                params.tau,
                &sqrt_c,
                &basis,
                rng,
            );
            let mut adjusted = false;
            // The split-variable transform leaves the polyhedron unbounded
            // along x'_j = x''_j; contract that common mode so feasible
            // points keep a bounded representation.
            if problem.transform_kind != TransformKind::SlackOnly {
                adjusted |=
                    contract_split_variables(&mut sampled.x, problem.orig_dim, split_threshold);
            }
            // Very large mutations that cancel back to polytope scale leave
            // residual dust of order sigma * ||A B||; re-center such points
            // before repair and evaluation. Components pushed below zero by
            // the correction flow into the regular repair path.
            if feasibility::equality_residual(a, b, &sampled.x) > recenter_threshold {
                let centered = &sampled.x - &x_particular;
                sampled.x = &x_particular + &basis.basis * (basis.basis.transpose() * centered);
                adjusted = true;
            }
            if adjusted {
                sampled.z = &sampled.x - &state.centroid;
                sampled.s = basis.basis.transpose() * &sampled.z / sampled.sigma;
            }
            let mut ind = repair_individual(sampled, &state.centroid, &basis, a, b, &set, rng)?;
            ind.f_value = guard.eval(&ind.x);
            gen_best = gen_best.min(ind.f_value);
            if ind.f_value < state.bsf.f_value {
                state.bsf = ind.clone();
                state.g_bsf = state.generation + 1;
            }
            offspring.push(ind);
        }

        let rec = rank_and_recombine(&offspring, params.mu);
        // Means of feasible points stay feasible on a convex set; taking the
        // mean of the selected vectors directly keeps that true in floats.
        state.centroid = rec.mean_x.clone();
        feasibility::snap_numerical_zeros(&mut state.centroid);
        debug_assert!(
            state.centroid.min() >= feasibility::NONNEG_TOL,
            "recombined centroid left the positive orthant"
        );
        let f_centroid = guard.eval(&state.centroid);
        gen_best = gen_best.min(f_centroid);
        if f_centroid < state.bsf.f_value {
            state.bsf = Individual {
                f_value: f_centroid,
                x: state.centroid.clone(),
                z: rec.mean_z.clone(),
                s: rec.mean_s.clone(),
                sigma: rec.mean_sigma,
            };
            state.g_bsf = state.generation + 1;
        }
        state.sigma = rec.mean_sigma;
        state.c = update_covariance(&state.c, &rec.mean_ss_t, params.tau_c);
        state.generation += 1;
        state.centroid_history.push_back(state.centroid.clone());
        while state.centroid_history.len() > params.delta_window + 1 {
            state.centroid_history.pop_front();
        }

        if let Some(cb) = trace.as_deref_mut() {
            cb(&GenerationTrace {
                generation: state.generation,
                sigma: state.sigma,
                best_f: gen_best,
                bsf_f: state.bsf.f_value,
                evals_objective: guard.objective_evals,
                evals_constraint: problem.constraint_evals_spent,
            });
        }

        if let Some(reason) = check_termination(&state, &params, guard.total()) {
            return Ok(OptResult {
                best: state.bsf,
                termination: reason,
                generations: state.generation as u64,
                eval_counts: guard.counts(),
                history: guard.history,
                contract_violations: guard.violations,
                params,
            });
        }
    }
}
