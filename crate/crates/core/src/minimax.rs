//! Discretized extremal problem `J = min_ρ max_u Σ_j ρ_j φ^p(λ_j u/λ_n)` over
//! probability vectors `ρ`, with its dual measure on the `u` grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex::maximize;
use crate::smoothness::StepWeight;
use crate::spectrum::ExponentLadder;

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxProblem {
    /// `matrix[i][j] = φ^p(λ_{columns[j]} u_i / λ_n)`.
    matrix: Vec<Vec<f64>>,
    nodes: Vec<f64>,
    columns: Vec<usize>,
}

impl MinimaxProblem {
    pub fn new(matrix: Vec<Vec<f64>>, nodes: Vec<f64>, columns: Vec<usize>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidArgument("minimax problem has no columns".into()));
        }
        if matrix.len() < 2 || matrix.len() != nodes.len() {
            return Err(Error::InvalidArgument("minimax problem needs ≥ 2 rows, one per node".into()));
        }
        if matrix.iter().any(|r| r.len() != columns.len()) {
            return Err(Error::InvalidArgument("ragged minimax matrix".into()));
        }
        if matrix.iter().flatten().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("minimax entries must be finite and ≥ 0".into()));
        }
        Ok(Self { matrix, nodes, columns })
    }

    /// Uniform grid of `grid` nodes on `[0, τ]`, columns `k = n..=min(K, len)`.
    pub fn build(
        ladder: &ExponentLadder,
        n: usize,
        phi: &StepWeight,
        p: f64,
        tau: f64,
        grid: usize,
        kmax: usize,
    ) -> Result<Self> {
        if n < 1 || !(tau > 0.0) || grid < 2 {
            return Err(Error::InvalidArgument("need n ≥ 1, τ > 0 and grid ≥ 2".into()));
        }
        let lam_n = ladder.lambda(n)?;
        let top = kmax.min(ladder.len());
        if top < n {
            return Err(Error::InvalidArgument(format!("empty column range [{n}, {top}]")));
        }
        let columns: Vec<usize> = (n..=top).collect();
        let thetas: Vec<f64> = columns
            .iter()
            .map(|&k| ladder.lambda(k).map(|l| l / lam_n))
            .collect::<Result<_>>()?;
        let nodes: Vec<f64> = (0..grid)
            .map(|i| if i + 1 == grid { tau } else { tau * i as f64 / (grid - 1) as f64 })
            .collect();
        let matrix = nodes
            .iter()
            .map(|&u| thetas.iter().map(|&th| phi.eval_pow(th * u, p)).collect())
            .collect();
        Self::new(matrix, nodes, columns)
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    /// `max_i Σ_j ρ_j Φ[i][j]`.
    pub fn primal_value(&self, rho: &[f64]) -> f64 {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(rho).map(|(a, r)| a * r).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ_i y_i Φ[i][j]` for every column.
    pub fn column_integrals(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.columns.len()];
        for (row, &w) in self.matrix.iter().zip(y) {
            if w != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += w * a;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxSolution {
    pub value: f64,
    /// Probability weights over the columns.
    pub rho: Vec<f64>,
    /// Probability weights over the grid nodes (jumps of the extremal measure).
    pub dual_weights: Vec<f64>,
    /// `primal - dual` objective gap after normalization.
    pub duality_gap: f64,
    pub iterations: usize,
}

/// Solves the min-max through its dual: `max z` with `z ≤ Σ_i y_i Φ[i][j]` for
/// every column and `Σ y ≤ 1`. The row multipliers give `ρ`.
pub fn solve_minimax(problem: &MinimaxProblem) -> Result<MinimaxSolution> {
    let rows = problem.matrix.len();
    let cols = problem.columns.len();
    // variables y_0..y_{rows-1}, z
    let mut c = vec![0.0; rows + 1];
    c[rows] = 1.0;
    let mut a = Vec::with_capacity(cols + 1);
    for j in 0..cols {
        let mut r: Vec<f64> = problem.matrix.iter().map(|row| -row[j]).collect();
        r.push(1.0);
        a.push(r);
    }
    let mut budget = vec![1.0; rows];
    budget.push(0.0);
    a.push(budget);
    let mut b = vec![0.0; cols];
    b.push(1.0);
    let sol = maximize(&c, &a, &b)?;

    let value = sol.objective;
    let mut y: Vec<f64> = sol.x[..rows].iter().map(|v| v.max(0.0)).collect();
    let ysum: f64 = y.iter().sum();
    if !(ysum > 0.0) {
        return Err(Error::Solver("dual weights vanish".into()));
    }
    y.iter_mut().for_each(|v| *v /= ysum);
    let mut rho: Vec<f64> = sol.duals[..cols].iter().map(|v| v.max(0.0)).collect();
    let rsum: f64 = rho.iter().sum();
    if !(rsum > 0.0) {
        return Err(Error::Solver("column weights vanish".into()));
    }
    rho.iter_mut().for_each(|v| *v /= rsum);

    let primal = problem.primal_value(&rho);
    let integrals = problem.column_integrals(&y);
    let dual = integrals.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = 1.0 + value;
    if (primal - value).abs() > 1e-9 * scale {
        return Err(Error::Solver(format!("primal certificate {primal} misses value {value}")));
    }
    if dual < value - 1e-8 * scale {
        return Err(Error::Solver(format!("dual certificate {dual} below value {value}")));
    }
    for (j, (&r, &s)) in rho.iter().zip(&integrals).enumerate() {
        if r > 1e-8 && (s - value).abs() > 1e-6 * scale {
            return Err(Error::Solver(format!(
                "complementary slackness fails at column {}: {s} vs {value}",
                problem.columns[j]
            )));
        }
    }
    Ok(MinimaxSolution {
        value,
        rho,
        dual_weights: y,
        duality_gap: primal - dual,
        iterations: sol.iterations,
    })
}
