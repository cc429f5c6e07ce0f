//! Dense linear-algebra primitives the strategy depends on: orthonormal
//! null-space bases, symmetric eigendecomposition, Moore-Penrose
//! pseudoinverse and minimum-norm linear solves.
//!
//! Everything here is a pure function of its inputs and deterministic for a
//! fixed input (no randomized pivoting), so trajectories that depend on
//! these results are reproducible.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default relative rank threshold: singular values below
/// `rank_tol * sigma_max` are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    /// The null space is trivial; there are no search directions left.
    #[error("matrix has full column rank: the null space is empty")]
    EmptyNullSpace,
    /// `Ax = b` has no solution within tolerance.
    #[error("linear system is inconsistent (least-squares residual {residual:.3e})")]
    InconsistentSystem { residual: f64 },
    /// Input to the eigendecomposition is not symmetric within tolerance.
    #[error("matrix is not symmetric (max asymmetry {defect:.3e})")]
    NotSymmetric { defect: f64 },
    /// Input contains NaN or infinite entries.
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

/// An orthonormal basis of `null(A)` for a `K x D` matrix `A`.
///
/// The `D x N` matrix `basis` satisfies `basisᵀ basis = I` and
/// `A basis = 0` up to round-off, with `N = D - rank(A)`.
#[derive(Debug, Clone)]
pub struct NullSpaceBasis {
    pub basis: DMatrix<f64>,
}

impl NullSpaceBasis {
    /// Ambient dimension `D`.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Null-space dimension `N`.
    pub fn null_dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Computes an orthonormal basis of `null(A)`.
///
/// The row space is identified through a singular value decomposition with
/// the relative rank threshold `rank_tol * sigma_max`, and completed to a
/// full orthonormal basis of `R^D` by Householder reflections; the trailing
/// columns form the null-space basis. Any orthonormal basis of the null
/// space is a valid result; callers must not rely on a particular
/// orientation.
pub fn orthonormal_null_space_basis(
    a: &DMatrix<f64>,
    rank_tol: f64,
) -> Result<NullSpaceBasis, NumericsError> {
    assert!(a.nrows() > 0 && a.ncols() > 0, "matrix must be non-empty");
    assert!(rank_tol > 0.0, "rank_tol must be positive");
    if !a.iter().all(|v| v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }

    let dim = a.ncols();
    let svd = a.clone().svd(false, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let threshold = rank_tol * sigma_max;
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > threshold)
        .count();

    if rank == dim {
        return Err(NumericsError::EmptyNullSpace);
    }

    // Row-space basis: the first `rank` right singular vectors.
    let v_t = svd.v_t.expect("svd computed with v_t");
    let row_space = v_t.rows(0, rank).transpose();
    let q = householder_completion(&row_space, dim);
    let basis = q.columns(rank, dim - rank).into_owned();
    Ok(NullSpaceBasis { basis })
}

/// Completes the orthonormal columns of `m` (D x r, r <= D) to a full
/// orthonormal D x D matrix whose first r columns span the same space.
fn householder_completion(m: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let r = m.ncols();
    let mut work = m.clone();
    // Unit reflector vectors; a zero vector encodes the identity.
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(r);

    for j in 0..r {
        let mut v = DVector::zeros(dim);
        for i in j..dim {
            v[i] = work[(i, j)];
        }
        let norm = v.norm();
        if norm <= f64::EPSILON {
            reflectors.push(DVector::zeros(dim));
            continue;
        }
        let alpha = if v[j] >= 0.0 { -norm } else { norm };
        v[j] -= alpha;
        let vnorm = v.norm();
        if vnorm <= f64::EPSILON {
            reflectors.push(DVector::zeros(dim));
            continue;
        }
        v /= vnorm;
        for c in j..r {
            let dot = 2.0 * v.dot(&work.column(c));
            for i in 0..dim {
                work[(i, c)] -= dot * v[i];
            }
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{r-1}; apply reflectors right-to-left to each e_k.
    let mut q = DMatrix::<f64>::identity(dim, dim);
    for k in 0..dim {
        let mut col = q.column_mut(k);
        for v in reflectors.iter().rev() {
            let dot = 2.0 * v.dot(&col);
            if dot != 0.0 {
                for i in 0..dim {
                    col[i] -= dot * v[i];
                }
            }
        }
    }
    q
}

/// Minimum-Euclidean-norm least-squares solution of `Ax = b`.
///
/// Fails with [`NumericsError::InconsistentSystem`] when the least-squares
/// residual exceeds `1e-9 * (1 + ||b||_inf)`.
pub fn min_norm_solution(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>, NumericsError> {
    assert_eq!(a.nrows(), b.len(), "shape mismatch between A and b");
    if !a.iter().all(|v| v.is_finite()) || !b.iter().all(|v| v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let x = svd
        .solve(b, 1e-12 * sigma_max.max(1.0))
        .expect("svd solve with u and v_t");
    let residual = (a * &x - b).amax();
    let tol = 1e-9 * (1.0 + b.amax());
    if residual > tol {
        return Err(NumericsError::InconsistentSystem { residual });
    }
    Ok(x)
}

/// Eigendecomposition of a symmetric matrix `C = U diag(vals) Uᵀ` with the
/// eigenvalues sorted ascending (and `U`'s columns permuted to match).
///
/// The input must be symmetric within `1e-9`; it is explicitly symmetrized
/// before factorization so round-off asymmetry cannot leak through.
pub fn symmetric_eigendecomposition(
    c: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>), NumericsError> {
    assert_eq!(c.nrows(), c.ncols(), "matrix must be square");
    if !c.iter().all(|v| v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let defect = (c - c.transpose()).amax();
    if defect > 1e-9 {
        return Err(NumericsError::NotSymmetric { defect });
    }
    let sym = (c + c.transpose()) * 0.5;
    let eigen = nalgebra::SymmetricEigen::new(sym);

    let n = eigen.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eigen.eigenvalues[i].total_cmp(&eigen.eigenvalues[j]));

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eigen.eigenvalues[src];
        vectors.set_column(dst, &eigen.eigenvectors.column(src));
    }
    Ok((vectors, values))
}

/// Moore-Penrose pseudoinverse of an `L x M` matrix.
pub fn pseudoinverse(y: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(y.nrows() >= 1, "matrix must have at least one row");
    assert!(
        y.iter().all(|v| v.is_finite()),
        "matrix contains non-finite entries"
    );
    let svd = y.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    svd.pseudo_inverse(1e-12 * sigma_max.max(1.0))
        .expect("svd computed with u and v_t")
}
