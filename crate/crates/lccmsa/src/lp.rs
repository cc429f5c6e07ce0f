//! A bundled dense linear-program solver.
//!
//! Solves `min cᵀv  s.t.  Av = d, v >= 0` with a two-phase tableau simplex.
//! Pivoting starts with Dantzig's rule and switches to Bland's rule
//! permanently once the objective stalls, which guarantees termination on
//! degenerate problems. The solver sits behind [`LpSolver`] so an external
//! implementation can be swapped in.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
}

/// Minimal solver interface: `min cᵀv  s.t.  Av = d, v >= 0`.
pub trait LpSolver {
    fn solve(
        &self,
        costs: &DVector<f64>,
        a: &DMatrix<f64>,
        d: &DVector<f64>,
    ) -> Result<LpSolution, LpError>;
}

/// Dense two-phase simplex.
#[derive(Debug, Clone)]
pub struct DenseSimplex {
    /// Entries below this magnitude are unusable as pivots.
    pub pivot_tol: f64,
    /// Reduced costs above `-cost_tol` count as non-negative.
    pub cost_tol: f64,
    /// Hard pivot budget; 0 means `1000 + 50 * (rows + cols)`.
    pub max_iters: usize,
    /// Consecutive non-improving pivots before switching to Bland's rule.
    pub stall_switch: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-10,
            cost_tol: 1e-9,
            max_iters: 0,
            stall_switch: 64,
        }
    }
}

impl LpSolver for DenseSimplex {
    fn solve(
        &self,
        costs: &DVector<f64>,
        a: &DMatrix<f64>,
        d: &DVector<f64>,
    ) -> Result<LpSolution, LpError> {
        assert_eq!(a.nrows(), d.len(), "row count mismatch");
        assert_eq!(a.ncols(), costs.len(), "column count mismatch");
        let n = a.ncols();

        // Row equilibration keeps pivot magnitudes O(1); the solution set is
        // unchanged. Rows are also flipped so the right-hand side is >= 0.
        let mut a2 = a.clone();
        let mut d2 = d.clone();
        for i in 0..a2.nrows() {
            let scale = a2.row(i).amax();
            if scale > 0.0 {
                for j in 0..n {
                    a2[(i, j)] /= scale;
                }
                d2[i] /= scale;
            }
            if d2[i] < 0.0 {
                for j in 0..n {
                    a2[(i, j)] = -a2[(i, j)];
                }
                d2[i] = -d2[i];
            }
        }

        let m = a2.nrows();
        let width = n + m + 1;
        let max_iters = if self.max_iters == 0 {
            1000 + 50 * (m + n)
        } else {
            self.max_iters
        };

        // Tableau rows 0..m are constraints, row m is the reduced-cost row;
        // column n + m holds the right-hand side.
        let mut tab = DMatrix::<f64>::zeros(m + 1, width);
        let mut basis: Vec<usize> = (n..n + m).collect();
        for i in 0..m {
            for j in 0..n {
                tab[(i, j)] = a2[(i, j)];
            }
            tab[(i, n + i)] = 1.0;
            tab[(i, n + m)] = d2[i];
        }
        // Phase-1 reduced costs for the all-artificial basis.
        for j in 0..n {
            let mut sum = 0.0;
            for i in 0..m {
                sum += tab[(i, j)];
            }
            tab[(m, j)] = -sum;
        }
        let rhs_sum: f64 = (0..m).map(|i| tab[(i, n + m)]).sum();
        tab[(m, n + m)] = -rhs_sum;

        self.run_phase(&mut tab, &mut basis, n + m, max_iters)?;
        let phase1_obj = -tab[(m, n + m)];
        if phase1_obj > 1e-9 * (1.0 + rhs_sum) {
            return Err(LpError::Infeasible);
        }

        // Drive artificial variables out of the basis; rows where that is
        // impossible are redundant and get dropped.
        let mut keep_rows: Vec<usize> = Vec::with_capacity(m);
        for i in 0..m {
            if basis[i] >= n {
                let pivot_col = (0..n).find(|&j| tab[(i, j)].abs() > self.pivot_tol);
                if let Some(j) = pivot_col {
                    pivot(&mut tab, &mut basis, i, j);
                    keep_rows.push(i);
                }
            } else {
                keep_rows.push(i);
            }
        }
        if keep_rows.len() < m {
            let (tab2, basis2, a3, d3) = drop_rows(&tab, &basis, &a2, &d2, &keep_rows, n);
            tab = tab2;
            basis = basis2;
            a2 = a3;
            d2 = d3;
        }
        let m = a2.nrows();

        // Phase-2 reduced costs; artificial columns are barred from entering.
        let rhs_col = tab.ncols() - 1;
        for j in 0..tab.ncols() {
            tab[(m, j)] = 0.0;
        }
        for j in 0..n {
            tab[(m, j)] = costs[j];
        }
        for i in 0..m {
            let c_basic = costs[basis[i]];
            if c_basic != 0.0 {
                for j in 0..tab.ncols() {
                    let v = tab[(i, j)];
                    if v != 0.0 {
                        tab[(m, j)] -= c_basic * v;
                    }
                }
            }
        }
        self.run_phase(&mut tab, &mut basis, n, max_iters)?;

        // Re-solve the final basis against the original (equilibrated) data
        // to remove drift accumulated over pivots.
        let mut x = DVector::zeros(n);
        let values = refactor_basis(&a2, &d2, &basis)
            .unwrap_or_else(|| DVector::from_fn(m, |i, _| tab[(i, rhs_col)]));
        for (i, &var) in basis.iter().enumerate() {
            x[var] = values[i];
        }
        // Exact zeros for round-off negatives.
        let clamp = 1e-9 * (1.0 + x.amax());
        for v in x.iter_mut() {
            if *v < 0.0 && *v >= -clamp {
                *v = 0.0;
            }
        }
        let objective = costs.dot(&x);
        Ok(LpSolution { x, objective })
    }
}

impl DenseSimplex {
    /// Runs simplex pivots until optimality. Columns `>= enter_limit`
    /// cannot enter the basis.
    fn run_phase(
        &self,
        tab: &mut DMatrix<f64>,
        basis: &mut [usize],
        enter_limit: usize,
        max_iters: usize,
    ) -> Result<(), LpError> {
        let m = tab.nrows() - 1;
        let rhs = tab.ncols() - 1;
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = tab[(m, rhs)];

        for _ in 0..max_iters {
            let entering = if bland {
                (0..enter_limit).find(|&j| tab[(m, j)] < -self.cost_tol)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..enter_limit {
                    let r = tab[(m, j)];
                    if r < -self.cost_tol && best.is_none_or(|(_, b)| r < b) {
                        best = Some((j, r));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(col) = entering else {
                return Ok(());
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let coeff = tab[(i, col)];
                if coeff > self.pivot_tol {
                    let ratio = tab[(i, rhs)] / coeff;
                    let better = match leave {
                        None => true,
                        Some((best_i, best_ratio)) => {
                            ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && basis[i] < basis[best_i])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Err(LpError::Unbounded);
            };

            pivot(tab, basis, row, col);

            let obj = tab[(m, rhs)];
            if (obj - last_obj).abs() <= 1e-12 * (1.0 + obj.abs()) {
                stall += 1;
                if stall > self.stall_switch {
                    bland = true;
                }
            } else {
                stall = 0;
            }
            last_obj = obj;
        }
        Err(LpError::IterationLimit)
    }
}

fn pivot(tab: &mut DMatrix<f64>, basis: &mut [usize], row: usize, col: usize) {
    let width = tab.ncols();
    let pivot_val = tab[(row, col)];
    for j in 0..width {
        tab[(row, j)] /= pivot_val;
    }
    tab[(row, col)] = 1.0;
    for r in 0..tab.nrows() {
        if r == row {
            continue;
        }
        let factor = tab[(r, col)];
        if factor != 0.0 {
            for j in 0..width {
                tab[(r, j)] -= factor * tab[(row, j)];
            }
            tab[(r, col)] = 0.0;
        }
    }
    basis[row] = col;
}

fn drop_rows(
    tab: &DMatrix<f64>,
    basis: &[usize],
    a: &DMatrix<f64>,
    d: &DVector<f64>,
    keep: &[usize],
    n: usize,
) -> (DMatrix<f64>, Vec<usize>, DMatrix<f64>, DVector<f64>) {
    let m2 = keep.len();
    let width = tab.ncols();
    let mut tab2 = DMatrix::zeros(m2 + 1, width);
    let mut basis2 = Vec::with_capacity(m2);
    for (dst, &src) in keep.iter().enumerate() {
        for j in 0..width {
            tab2[(dst, j)] = tab[(src, j)];
        }
        basis2.push(basis[src]);
    }
    for j in 0..width {
        tab2[(m2, j)] = tab[(tab.nrows() - 1, j)];
    }
    let mut a2 = DMatrix::zeros(m2, n);
    let mut d2 = DVector::zeros(m2);
    for (dst, &src) in keep.iter().enumerate() {
        for j in 0..n {
            a2[(dst, j)] = a[(src, j)];
        }
        d2[dst] = d[src];
    }
    (tab2, basis2, a2, d2)
}

/// Solves `A_B x_B = d` for the basic values from the original data, with
/// two rounds of iterative refinement.
fn refactor_basis(a: &DMatrix<f64>, d: &DVector<f64>, basis: &[usize]) -> Option<DVector<f64>> {
    let m = a.nrows();
    let mut a_b = DMatrix::zeros(m, m);
    for (i, &var) in basis.iter().enumerate() {
        a_b.set_column(i, &a.column(var));
    }
    let lu = a_b.clone().lu();
    let mut x = lu.solve(d)?;
    for _ in 0..2 {
        let residual = d - &a_b * &x;
        if let Some(corr) = lu.solve(&residual) {
            x += corr;
        }
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn solve(costs: &[f64], rows: &[&[f64]], rhs: &[f64]) -> Result<LpSolution, LpError> {
        let n = costs.len();
        let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        DenseSimplex::default().solve(
            &DVector::from_row_slice(costs),
            &a,
            &DVector::from_row_slice(rhs),
        )
    }

    #[test]
    fn solves_small_lp() {
        // min -x1 - 2x2 s.t. x1 + x2 + s = 4, x1 + 3x2 + t = 6
        let sol = solve(
            &[-1.0, -2.0, 0.0, 0.0],
            &[&[1.0, 1.0, 1.0, 0.0], &[1.0, 3.0, 0.0, 1.0]],
            &[4.0, 6.0],
        )
        .unwrap();
        assert_abs_diff_eq!(sol.objective, -5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        // x1 = -1 with x1 >= 0 is impossible.
        let err = solve(&[1.0], &[&[1.0]], &[-1.0]).unwrap_err();
        assert_eq!(err, LpError::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x1 s.t. x1 - x2 = 0: x1 can grow without bound.
        let err = solve(&[-1.0, 0.0], &[&[1.0, -1.0]], &[0.0]).unwrap_err();
        assert_eq!(err, LpError::Unbounded);
    }

    #[test]
    fn handles_redundant_rows() {
        let sol = solve(&[1.0, 1.0], &[&[1.0, 1.0], &[2.0, 2.0]], &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn survives_degenerate_beale_cycle() {
        // Beale's classic cycling example (with slacks); Dantzig's rule
        // cycles on it without an anti-cycling fallback.
        let sol = solve(
            &[-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0],
            &[
                &[0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0],
                &[0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0],
                &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            ],
            &[0.0, 0.0, 1.0],
        )
        .unwrap();
        assert_abs_diff_eq!(sol.objective, -0.05, epsilon = 1e-9);
    }

    #[test]
    fn equality_constrained_projection_like_lp() {
        // min z1 + z2 s.t. x' on the segment x1 + x2 = 1, x >= 0,
        // z bounds |x' - (-0.5, 1.5)|.
        // Variables: x1, x2, z1, z2, s1, s2, s3, s4.
        let big = solve(
            &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            &[
                &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                // z1 - x1 - s1 = 0.5  <=>  z1 - x1 >= -x1_target
                &[-1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0],
                &[1.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0],
                &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0],
                &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0],
            ],
            &[1.0, 0.5, -0.5, -1.5, 1.5],
        )
        .unwrap();
        assert_abs_diff_eq!(big.objective, 1.0, epsilon = 1e-8);
    }
}
