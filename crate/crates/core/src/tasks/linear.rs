//! Square linear systems `A x = b`, scored by the squared residual.

use rand::Rng;

use crate::error::{check_len, Error, Result};

/// Pivots with magnitude below this are treated as singular.
pub const PIVOT_THRESHOLD: f64 = 1e-10;
/// Accepted tasks have `‖x*‖₂` at most this.
pub const MAX_SOLUTION_NORM: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearTask {
    n: usize,
    /// Row-major `n × n`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    solution: Vec<f64>,
}

/// Gaussian elimination with partial pivoting on a row-major `n × n` matrix.
pub fn solve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    check_len("linear matrix", n * n, a.len())?;
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        let pivot = m[pivot_row * n + col];
        if !(pivot.abs() >= PIVOT_THRESHOLD) {
            return Err(Error::Singular { pivot: pivot.abs() });
        }
        if pivot_row != col {
            for k in 0..n {
                m.swap(col * n + k, pivot_row * n + k);
            }
            rhs.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = m[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            m[row * n + col] = 0.0;
            for k in col + 1..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| m[row * n + k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / m[row * n + row];
    }
    Ok(x)
}

impl LinearTask {
    /// Builds a task from an explicit system, solving it exactly.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        if n == 0 {
            return Err(Error::Config("linear dimension must be >= 1".into()));
        }
        let solution = solve(&a, &b)?;
        Ok(Self { n, a, b, solution })
    }

    /// Draws `A, b ~ uniform(−1, 1)` until the system is well-pivoted and `‖x*‖₂ ≤ 6`.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("linear dimension must be >= 1".into()));
        }
        loop {
            let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let Ok(solution) = solve(&a, &b) else {
                continue;
            };
            if norm(&solution) <= MAX_SOLUTION_NORM {
                return Ok(Self { n, a, b, solution });
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("linear x", self.n, x.len())?;
        Ok(self
            .a
            .chunks_exact(self.n)
            .zip(&self.b)
            .map(|(row, b)| row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - b)
            .collect())
    }

    /// `‖A x − b‖₂²`.
    pub fn fitness(&self, x: &[f64]) -> Result<f64> {
        Ok(self.residual(x)?.iter().map(|r| r * r).sum())
    }

    pub fn oracle(&self) -> Vec<f64> {
        self.solution.clone()
    }

    pub fn cached_solution(&self) -> &[f64] {
        &self.solution
    }

    /// `[A row-major ‖ b]`.
    pub fn encode_theta(&self) -> Vec<f64> {
        let mut theta = self.a.clone();
        theta.extend_from_slice(&self.b);
        theta
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
