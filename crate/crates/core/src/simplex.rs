//! Dense two-phase simplex for `max cᵀx` subject to `Ax ≤ b`, `x ≥ 0`.
//!
//! Pricing is Dantzig's largest coefficient; after a run of degenerate pivots
//! the solver switches to Bland's rule for good, which rules out cycling.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint row, `≥ 0` for `≤` rows.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

const REFACTOR_ROUNDS: usize = 4;

struct Tableau {
    /// `rows × (cols + 1)`, last entry is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Initial tableau, kept to rebuild `t` from the current basis.
    orig: Vec<Vec<f64>>,
    /// Reduced costs `c_B B⁻¹ A_j - c_j` plus the objective value in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    banned: Vec<bool>,
    iterations: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let inv = 1.0 / self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v *= inv;
        }
        self.t[r][c] = 1.0;
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..width {
                    row[k] -= f * prow[k];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for k in 0..width {
                self.obj[k] -= f * prow[k];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Recomputes `B⁻¹ [A | b]` and the reduced costs for `cost` from the
    /// original data, discarding round-off accumulated by pivoting.
    fn refactor(&mut self, cost: &[f64]) -> Result<()> {
        let m = self.t.len();
        let width = self.cols + 1;
        // [B | orig] reduced by Gaussian elimination with partial pivoting
        let mut b: Vec<Vec<f64>> = (0..m).map(|i| self.basis.iter().map(|&j| self.orig[i][j]).collect()).collect();
        let mut x = self.orig.clone();
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&a, &c| b[a][col].abs().total_cmp(&b[c][col].abs()))
                .unwrap();
            if b[piv][col].abs() < PIVOT_TOL {
                return Err(Error::Solver("singular basis on refactorization".into()));
            }
            b.swap(col, piv);
            x.swap(col, piv);
            let inv = 1.0 / b[col][col];
            for v in b[col].iter_mut() {
                *v *= inv;
            }
            for v in x[col].iter_mut() {
                *v *= inv;
            }
            let (brow, xrow) = (b[col].clone(), x[col].clone());
            for i in 0..m {
                if i == col {
                    continue;
                }
                let f = b[i][col];
                if f != 0.0 {
                    for k in 0..m {
                        b[i][k] -= f * brow[k];
                    }
                    for k in 0..width {
                        x[i][k] -= f * xrow[k];
                    }
                }
            }
        }
        // row `col` of x now belongs to basis[col]
        for (i, row) in x.iter_mut().enumerate() {
            row[self.basis[i]] = 1.0;
            // round-off can push a degenerate basic value slightly below zero
            if row[self.cols] < 0.0 && row[self.cols] > -1e-9 {
                row[self.cols] = 0.0;
            }
        }
        self.t = x;
        let mut obj = vec![0.0; width];
        for (k, o) in obj.iter_mut().enumerate().take(self.cols) {
            *o = -cost[k];
        }
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb != 0.0 {
                for k in 0..width {
                    obj[k] += cb * self.t[i][k];
                }
            }
        }
        for &bj in &self.basis {
            obj[bj] = 0.0;
        }
        self.obj = obj;
        Ok(())
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let candidates = (0..self.cols).filter(|&j| !self.banned[j] && self.obj[j] < -COST_TOL);
        if bland {
            candidates.min()
        } else {
            // ties go to the lowest index
            candidates.min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]).then(a.cmp(&b)))
        }
    }

    fn leaving(&self, c: usize) -> Option<usize> {
        let rhs = self.cols;
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.t.iter().enumerate() {
            if row[c] > PIVOT_TOL {
                let ratio = row[rhs] / row[c];
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
        best.map(|b| b.0)
    }

    fn optimize(&mut self) -> Result<()> {
        let mut bland = false;
        let mut degenerate_run = 0;
        let stall_limit = 2 * self.t.len() + 10;
        loop {
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::Solver(format!("no convergence after {MAX_ITERATIONS} pivots")));
            }
            let Some(c) = self.entering(bland) else {
                return Ok(());
            };
            let Some(r) = self.leaving(c) else {
                return Err(Error::Solver("objective is unbounded".into()));
            };
            if self.t[r][c].abs() < PIVOT_TOL {
                return Err(Error::Solver(format!(
                    "near-singular pivot {:e} at row {r}, column {c}",
                    self.t[r][c]
                )));
            }
            if self.t[r][self.cols].abs() <= 1e-14 {
                degenerate_run += 1;
                if degenerate_run > stall_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
    }
}

/// Solves `max cᵀx, Ax ≤ b, x ≥ 0`. Rows with `b_i < 0` go through a phase one
/// with artificial variables.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::Solver("inconsistent dimensions".into()));
    }
    if a.iter().flatten().chain(b).chain(c).any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite input".into()));
    }
    let flipped: Vec<bool> = b.iter().map(|&v| v < 0.0).collect();
    let n_art = flipped.iter().filter(|&&f| f).count();
    // columns: x (n) | slack or surplus (m) | artificial (n_art) | rhs
    let cols = n + m + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let mut art = n + m;
    for i in 0..m {
        let s = if flipped[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = s * a[i][j];
        }
        t[i][n + i] = if flipped[i] { -1.0 } else { 1.0 };
        t[i][cols] = s * b[i];
        if flipped[i] {
            t[i][art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }
    let mut tab = Tableau {
        orig: t.clone(),
        t,
        obj: vec![0.0; cols + 1],
        basis,
        cols,
        banned: vec![false; cols],
        iterations: 0,
    };

    if n_art > 0 {
        // phase one: maximize -Σ artificials
        for j in n + m..cols {
            tab.obj[j] = 1.0;
        }
        for i in 0..m {
            if tab.basis[i] >= n + m {
                for k in 0..=cols {
                    tab.obj[k] -= tab.t[i][k];
                }
            }
        }
        tab.optimize()?;
        if tab.obj[cols] < -1e-9 {
            return Err(Error::Solver("constraints are infeasible".into()));
        }
        for i in 0..m {
            if tab.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| tab.t[i][j].abs() > PIVOT_TOL) {
                    tab.pivot(i, j);
                }
            }
        }
        for j in n + m..cols {
            tab.banned[j] = true;
        }
    }

    // phase two, restarted from a freshly factored basis until it stays optimal
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(c);
    for _ in 0..REFACTOR_ROUNDS {
        tab.refactor(&cost)?;
        let before = tab.iterations;
        tab.optimize()?;
        if tab.iterations == before {
            break;
        }
    }

    let mut x = vec![0.0; n];
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.t[i][cols];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    let duals = (0..m).map(|i| tab.obj[n + i]).collect();
    Ok(LpSolution {
        x,
        objective,
        duals,
        iterations: tab.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  →  36 at (2, 6)
        let sol = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
        // duals (0, 3/2, 1), and bᵀy equals the objective
        let dual_obj: f64 = sol.duals.iter().zip([4.0, 12.0, 18.0]).map(|(y, b)| y * b).sum();
        assert!((dual_obj - 36.0).abs() < 1e-10);
        assert!((sol.duals[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn phase_one_handles_lower_bounds() {
        // max -x - y, x + y ≥ 2 (written -x - y ≤ -2), x ≤ 3
        let sol = maximize(&[-1.0, -1.0], &[vec![-1.0, -1.0], vec![1.0, 0.0]], &[-2.0, 3.0]).unwrap();
        assert!((sol.objective + 2.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        assert!(maximize(&[1.0], &[vec![1.0], vec![-1.0]], &[1.0, -2.0]).is_err());
        assert!(maximize(&[1.0, 0.0], &[vec![-1.0, 1.0]], &[1.0]).is_err());
        assert!(maximize(&[1.0], &[vec![1.0, 2.0]], &[1.0]).is_err());
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example for naive Dantzig pricing
        let c = [0.75, -150.0, 0.02, -6.0];
        let a = vec![
            vec![0.25, -60.0, -0.04, 9.0],
            vec![0.5, -90.0, -0.02, 3.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let sol = maximize(&c, &a, &[0.0, 0.0, 1.0]).unwrap();
        assert!((sol.objective - 0.05).abs() < 1e-10);
    }
}
