//! An evolution strategy for black-box optimization under linear constraints.
//!
//! The optimizer evolves a population on the affine manifold `{x : Ax = b}`
//! by mutating inside the null space of `A`, and repairs violations of
//! `x >= 0` by projecting back onto the feasible polyhedron. Objective
//! functions are only ever queried at feasible points, which makes the
//! method usable in settings where infeasible inputs are not tolerated
//! (simulators, finite-element models, portfolio weights, ...).
//!
//! Crate layout:
//!
//! * [`numerics`] — dense linear-algebra primitives (null-space bases,
//!   symmetric eigendecomposition, pseudoinverse, minimum-norm solves).
//! * [`lp`] — a bundled dense two-phase simplex solver.
//! * [`standard_form`] — transformations of general linear-constraint
//!   problems into standard form `Ax = b, x >= 0` and back.
//! * [`projection`] — repair of infeasible points: an l1-minimal projection
//!   via linear programming and a fast iterative projection that moves
//!   toward random interior reference points.
//! * [`es_core`] — the generational loop: self-adaptive step sizes,
//!   covariance self-adaptation with condition-number regularization,
//!   rank-based recombination, termination logic.
//! * [`constraint_approx`] — recovery of linear constraint coefficients
//!   from black-box constraint evaluations.
//! * [`problems`] — benchmark generators: Klee-Minty cubes and randomly
//!   constrained variants of standard test objectives.

pub mod constraint_approx;
pub mod es_core;
pub mod feasibility;
pub mod lp;
pub mod numerics;
pub mod problems;
pub mod projection;
pub mod standard_form;

pub use es_core::{
    optimize, EsError, OptResult, ParamOverrides, StrategyParams, TerminationReason,
};
pub use standard_form::StandardFormProblem;
