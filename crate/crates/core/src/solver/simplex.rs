//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Solves `min c·x` subject to `Ax = b`, `x ≥ 0`. Meant for the small LPs of
//! the diagnostics (basis pursuit oracle, null-space-property and certificate
//! checks), where exactness and determinism matter more than speed.

use nalgebra::{DMatrix, DVector};

use super::SolverReport;
use crate::error::{arg_err, Error, Result};
use crate::linalg::{Matrix, Vector};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

/// Row and column guards for [`simplex_bp`].
pub const SIMPLEX_MAX_ROWS: usize = 32;
pub const SIMPLEX_MAX_COLS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: DVector<f64>, objective: f64, pivots: usize },
    Infeasible,
    Unbounded,
}

struct Tableau {
    // (rows + 1) × (cols + 1); last row is the reduced-cost row, last column the rhs
    t: DMatrix<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs_col(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        self.t.row_mut(row).scale_mut(1.0 / p);
        let pivot_row = self.t.row(row).clone_owned();
        for i in 0..self.t.nrows() {
            if i != row {
                let factor = self.t[(i, col)];
                if factor != 0.0 {
                    for (j, pv) in pivot_row.iter().enumerate() {
                        self.t[(i, j)] -= factor * pv;
                    }
                }
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs Bland's rule over columns `0..allowed`. Returns `false` on
    /// unboundedness.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        let obj = self.rows();
        let rhs = self.rhs_col();
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::SizeLimit(format!("simplex exceeded {MAX_PIVOTS} pivots")));
            }
            let Some(col) = (0..allowed).find(|&j| self.t[(obj, j)] < -COST_EPS) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                let a = self.t[(i, col)];
                if a > PIVOT_EPS {
                    let ratio = self.t[(i, rhs)] / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Ok(false),
            }
        }
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let obj = self.rows();
        let cols = self.t.ncols();
        for j in 0..cols {
            self.t[(obj, j)] = if j < costs.len() { costs[j] } else { 0.0 };
        }
        for i in 0..self.rows() {
            let cb = costs.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..cols {
                    let v = self.t[(i, j)];
                    self.t[(obj, j)] -= cb * v;
                }
            }
        }
    }
}

/// Minimize `c·x` subject to `Ax = b`, `x ≥ 0`.
pub fn solve_standard_form(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<LpOutcome> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != n {
        return arg_err("LP dimensions do not agree");
    }
    // phase 1 tableau with one artificial per row
    let mut t = DMatrix::zeros(m + 1, n + m + 1);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, n + m)] = sign * b[i];
    }
    let mut tab = Tableau { t, basis: (n..n + m).collect(), pivots: 0 };
    let mut phase1 = vec![0.0; n + m];
    phase1[n..].fill(1.0);
    tab.set_costs(&phase1);
    tab.optimize(n + m)?;

    let infeasibility = -tab.t[(m, n + m)];
    let scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if infeasibility > 1e-9 * scale {
        return Ok(LpOutcome::Infeasible);
    }

    // drive remaining artificials out of the basis; drop redundant rows
    let mut keep = Vec::with_capacity(m);
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.t[(i, j)].abs() > PIVOT_EPS) {
                tab.pivot(i, j);
                keep.push(i);
            }
        } else {
            keep.push(i);
        }
    }
    if keep.len() < m {
        let mut rows: Vec<usize> = keep.clone();
        rows.push(m);
        let t = tab.t.select_rows(&rows);
        let basis = keep.iter().map(|&i| tab.basis[i]).collect();
        tab = Tableau { t, basis, pivots: tab.pivots };
    }

    let costs: Vec<f64> = c.iter().copied().collect();
    tab.set_costs(&costs);
    if !tab.optimize(n)? {
        return Ok(LpOutcome::Unbounded);
    }
    let rhs = tab.rhs_col();
    let mut x = DVector::zeros(n);
    for (i, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = tab.t[(i, rhs)].max(0.0);
        }
    }
    let objective = c.dot(&x);
    Ok(LpOutcome::Optimal { x, objective, pivots: tab.pivots })
}

/// Exact basis pursuit `min ‖x‖₁` subject to `Ax = b` for real data, via the
/// LP split `x = p − q`, `p, q ≥ 0`.
pub fn simplex_bp(a: &Matrix<f64>, b: &Vector<f64>) -> Result<SolverReport<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if m > SIMPLEX_MAX_ROWS || n > SIMPLEX_MAX_COLS {
        return Err(Error::SizeLimit(format!(
            "simplex_bp is limited to {SIMPLEX_MAX_ROWS}x{SIMPLEX_MAX_COLS}, got {m}x{n}"
        )));
    }
    if b.len() != m {
        return arg_err(format!("b has length {}, A has {m} rows", b.len()));
    }
    let mut lp = DMatrix::zeros(m, 2 * n);
    lp.view_mut((0, 0), (m, n)).copy_from(a.as_inner());
    lp.view_mut((0, n), (m, n)).copy_from(&(-a.as_inner()));
    let c = DVector::from_element(2 * n, 1.0);
    match solve_standard_form(&lp, b, &c)? {
        LpOutcome::Optimal { x: pq, pivots, .. } => {
            let x = DVector::from_fn(n, |j, _| pq[j] - pq[n + j]);
            let primal = (a.mul_vec(&x) - b).norm();
            Ok(SolverReport {
                objective: x.iter().map(|v| v.abs()).sum(),
                solution: x,
                primal_residual: primal,
                dual_residual: 0.0,
                iterations: pivots,
                converged: true,
            })
        }
        LpOutcome::Infeasible => Err(Error::Infeasible("b is not in the range of A".into())),
        LpOutcome::Unbounded => unreachable!("basis pursuit objective is bounded below by zero"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn toy_basis_pursuit_vertex() {
        let a = Matrix::from_row_major(2, 3, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let r = simplex_bp(&a, &dvector![1.0, 1.0]).unwrap();
        assert!((r.solution - dvector![0.0, 0.0, 1.0]).norm() < 1e-12);
        assert!((r.objective - 1.0).abs() < 1e-12);
        let z = simplex_bp(&a, &dvector![0.0, 0.0]).unwrap();
        assert_eq!(z.solution.norm(), 0.0);
    }

    #[test]
    fn negative_rhs_and_signs() {
        let a = Matrix::from_row_major(2, 3, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let r = simplex_bp(&a, &dvector![-1.0, -1.0]).unwrap();
        assert!((r.solution - dvector![0.0, 0.0, -1.0]).norm() < 1e-12);
        // opposite signs: x3 would cancel, so x = (1, -1, 0)
        let r = simplex_bp(&a, &dvector![1.0, -1.0]).unwrap();
        assert!((r.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(simplex_bp(&a, &dvector![1.0, 2.0]), Err(Error::Infeasible(_))));
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        let r = simplex_bp(&a, &dvector![1.0, 2.0]).unwrap();
        assert!((r.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_guard() {
        let a = Matrix::from_row_major(1, 65, vec![1.0; 65]).unwrap();
        assert!(matches!(simplex_bp(&a, &dvector![1.0]), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn unbounded_standard_form() {
        // min −x1 s.t. x1 − x2 = 0
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let out = solve_standard_form(&a, &dvector![0.0], &dvector![-1.0, 0.0]).unwrap();
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_lp_terminates() {
        // classic cycling example (Beale) in standard form with slacks
        let a = DMatrix::from_row_slice(
            3,
            7,
            &[
                0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0, //
                0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
            ],
        );
        let b = dvector![0.0, 0.0, 1.0];
        let c = dvector![-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0];
        match solve_standard_form(&a, &b, &c).unwrap() {
            LpOutcome::Optimal { objective, .. } => assert!((objective + 0.05).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }
}
