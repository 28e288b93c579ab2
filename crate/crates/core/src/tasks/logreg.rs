//! Two-class Gaussian training sets; the solution vector is a logistic
//! regression `[w_1, …, w_N, bias]`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};

/// L2 weight on the non-bias coefficients of the fitted objective.
pub const L2_PENALTY: f64 = 0.1;
pub const SIGMA: f64 = 1.0;
/// Centre separation is drawn uniformly from this band, in units of sigma.
pub const DISTANCE_RANGE: (f64, f64) = (2.0, 3.0);
pub const TEST_SET_SIZE: usize = 200;

pub const ORACLE_STEP: f64 = 0.5;
pub const ORACLE_MAX_ITERATIONS: usize = 10_000;
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegTask {
    pub n: usize,
    /// Row-major `n_train × n`.
    pub patterns: Vec<f64>,
    pub labels: Vec<f64>,
    pub test_patterns: Vec<f64>,
    pub test_labels: Vec<f64>,
    pub sigma: f64,
    /// `centers[0]` generates label −1, `centers[1]` label +1.
    pub centers: [Vec<f64>; 2],
}

/// Numerically stable `log(1 + exp(z))`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn sample_labels<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let labels: Vec<f64> = (0..count)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let positives = labels.iter().filter(|y| **y > 0.0).count();
        if positives > 0 && positives < count {
            return labels;
        }
    }
}

fn sample_patterns<R: Rng + ?Sized>(
    labels: &[f64],
    centers: &[Vec<f64>; 2],
    sigma: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(labels.len() * centers[0].len());
    for y in labels {
        let c = if *y > 0.0 { &centers[1] } else { &centers[0] };
        out.extend(c.iter().map(|m| {
            let z: f64 = rng.sample(StandardNormal);
            m + sigma * z
        }));
    }
    out
}

impl LogRegTask {
    pub fn sample<R: Rng + ?Sized>(n: usize, n_train: usize, rng: &mut R) -> Result<Self> {
        let d = rng.gen_range(DISTANCE_RANGE.0..DISTANCE_RANGE.1) * SIGMA;
        Self::sample_with_distance(n, n_train, d, rng)
    }

    /// Centres at `±(d/2)·u` for a uniformly random unit direction `u`.
    pub fn sample_with_distance<R: Rng + ?Sized>(
        n: usize,
        n_train: usize,
        distance: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("logreg dimension must be >= 1".into()));
        }
        if n_train < 2 {
            return Err(Error::Config("logreg n_train must be >= 2".into()));
        }
        let direction = loop {
            let u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let len = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len > 1e-12 {
                break u.into_iter().map(|v| v / len).collect::<Vec<f64>>();
            }
        };
        let half = 0.5 * distance;
        let positive: Vec<f64> = direction.iter().map(|u| half * u).collect();
        let negative: Vec<f64> = positive.iter().map(|v| -v).collect();
        let centers = [negative, positive];

        let labels = sample_labels(n_train, rng);
        let patterns = sample_patterns(&labels, &centers, SIGMA, rng);
        let test_labels = sample_labels(TEST_SET_SIZE, rng);
        let test_patterns = sample_patterns(&test_labels, &centers, SIGMA, rng);
        Ok(Self {
            n,
            patterns,
            labels,
            test_patterns,
            test_labels,
            sigma: SIGMA,
            centers,
        })
    }

    pub fn n_train(&self) -> usize {
        self.labels.len()
    }

    pub fn solution_dim(&self) -> usize {
        self.n + 1
    }

    pub fn center_distance(&self) -> f64 {
        self.centers[0]
            .iter()
            .zip(&self.centers[1])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn margin(&self, w: &[f64], pattern: &[f64]) -> f64 {
        let (weights, bias) = w.split_at(self.n);
        weights.iter().zip(pattern).map(|(a, b)| a * b).sum::<f64>() + bias[0]
    }

    pub fn fitness(&self, w: &[f64]) -> Result<f64> {
        self.fitness_with_penalty(w, L2_PENALTY)
    }

    /// Mean logistic loss plus `lambda·‖weights‖²`; the bias is unpenalized.
    pub fn fitness_with_penalty(&self, w: &[f64], lambda: f64) -> Result<f64> {
        check_len("logreg w", self.solution_dim(), w.len())?;
        let data: f64 = self
            .patterns
            .chunks_exact(self.n)
            .zip(&self.labels)
            .map(|(p, y)| softplus(-y * self.margin(w, p)))
            .sum::<f64>()
            / self.n_train() as f64;
        let penalty: f64 = w[..self.n].iter().map(|v| v * v).sum::<f64>();
        Ok(data + lambda * penalty)
    }

    pub fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len("logreg w", self.solution_dim(), w.len())?;
        let mut g = vec![0.0; self.solution_dim()];
        let scale = 1.0 / self.n_train() as f64;
        for (p, y) in self.patterns.chunks_exact(self.n).zip(&self.labels) {
            let coeff = -y * sigmoid(-y * self.margin(w, p)) * scale;
            for (gi, pi) in g.iter_mut().zip(p) {
                *gi += coeff * pi;
            }
            g[self.n] += coeff;
        }
        for (gi, wi) in g.iter_mut().zip(&w[..self.n]) {
            *gi += 2.0 * L2_PENALTY * wi;
        }
        Ok(g)
    }

    /// Full-batch gradient descent from zero until the gradient inf-norm drops below tolerance.
    pub fn oracle(&self) -> Result<Vec<f64>> {
        let mut w = vec![0.0; self.solution_dim()];
        for _ in 0..ORACLE_MAX_ITERATIONS {
            let g = self.gradient(&w)?;
            let grad_norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if grad_norm < ORACLE_TOLERANCE {
                return Ok(w);
            }
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi -= ORACLE_STEP * gi;
            }
        }
        let g = self.gradient(&w)?;
        let final_norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if final_norm < ORACLE_TOLERANCE {
            return Ok(w);
        }
        Err(Error::NonConvergence {
            iterations: ORACLE_MAX_ITERATIONS,
            grad_norm: final_norm,
        })
    }

    fn recognition_on(&self, w: &[f64], patterns: &[f64], labels: &[f64]) -> Result<f64> {
        check_len("logreg w", self.solution_dim(), w.len())?;
        let correct = patterns
            .chunks_exact(self.n)
            .zip(labels)
            .filter(|(p, y)| {
                let predicted = if self.margin(w, p) >= 0.0 { 1.0 } else { -1.0 };
                predicted == **y
            })
            .count();
        Ok(correct as f64 / labels.len() as f64)
    }

    /// Held-out recognition rate; a zero margin counts as class +1.
    pub fn recognition(&self, w: &[f64]) -> Result<f64> {
        self.recognition_on(w, &self.test_patterns, &self.test_labels)
    }

    pub fn training_recognition(&self, w: &[f64]) -> Result<f64> {
        self.recognition_on(w, &self.patterns, &self.labels)
    }

    /// `[p_1 ‖ y_1 ‖ p_2 ‖ y_2 ‖ …]` in sampling order.
    pub fn encode_theta(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.n_train() * (self.n + 1));
        for (p, y) in self.patterns.chunks_exact(self.n).zip(&self.labels) {
            theta.extend_from_slice(p);
            theta.push(*y);
        }
        theta
    }
}
