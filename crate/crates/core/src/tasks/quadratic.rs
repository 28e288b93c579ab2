//! Separable quadratics `f(x) = Σ a_i x_i² + b_i x_i` with `a_i > 0`.

use rand::Rng;

use crate::error::{check_len, Error, Result};

pub const A_RANGE: (f64, f64) = (0.1, 1.1);
pub const B_RANGE: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTask {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl QuadraticTask {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_len("quadratic b", a.len(), b.len())?;
        if a.is_empty() {
            return Err(Error::Config("quadratic dimension must be >= 1".into()));
        }
        Ok(Self { a, b })
    }

    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("quadratic dimension must be >= 1".into()));
        }
        let a = (0..n).map(|_| rng.gen_range(A_RANGE.0..A_RANGE.1)).collect();
        let b = (0..n).map(|_| rng.gen_range(B_RANGE.0..B_RANGE.1)).collect();
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn fitness(&self, x: &[f64]) -> Result<f64> {
        check_len("quadratic x", self.dim(), x.len())?;
        Ok(self
            .a
            .iter()
            .zip(&self.b)
            .zip(x)
            .map(|((a, b), x)| a * x * x + b * x)
            .sum())
    }

    /// `x*_i = −b_i / (2 a_i)`.
    pub fn oracle(&self) -> Result<Vec<f64>> {
        if let Some(a) = self.a.iter().find(|a| !(**a > 0.0)) {
            return Err(Error::Config(format!("quadratic coefficient {a} is not positive")));
        }
        Ok(self
            .a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| -b / (2.0 * a))
            .collect())
    }

    /// `[a ‖ b]`.
    pub fn encode_theta(&self) -> Vec<f64> {
        let mut theta = self.a.clone();
        theta.extend_from_slice(&self.b);
        theta
    }
}
