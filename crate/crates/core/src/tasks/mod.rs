//! Parametric fitness families `f(x | θ)` with samplers, exact or iterative
//! minimizers, and the flat `θ` encoding fed to networks.

pub mod linear;
pub mod logreg;
pub mod quadratic;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use linear::LinearTask;
pub use logreg::LogRegTask;
pub use quadratic::QuadraticTask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Quadratic,
    Linear,
    Logreg,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Quadratic, Family::Linear, Family::Logreg];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Quadratic => "quadratic",
            Family::Linear => "linear",
            Family::Logreg => "logreg",
        }
    }

    /// Default dimension `N`.
    pub fn default_dimension(self) -> usize {
        match self {
            Family::Quadratic | Family::Linear => 5,
            Family::Logreg => 2,
        }
    }

    fn box_half_width(self) -> f64 {
        match self {
            Family::Quadratic => 5.0,
            Family::Linear | Family::Logreg => 6.0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown family {s:?}")))
    }
}

pub const DEFAULT_N_TRAIN: usize = 20;

/// Axis-aligned search domain shared by initialization, mutation and network outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SearchBox {
    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn clip_in_place(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn clip(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.clip_in_place(&mut out);
        out
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.lo)
                .zip(&self.hi)
                .all(|((v, lo), hi)| (*lo..=*hi).contains(v))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(lo, hi)| rng.gen_range(*lo..*hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDescriptor {
    pub family: Family,
    pub solution_dim: usize,
    pub theta_dim: usize,
    pub search_box: SearchBox,
}

/// A family together with its dimensions; enough to sample tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub dimension: usize,
    /// Training-set size for `logreg`; zero for the other families.
    pub n_train: usize,
}

impl FamilySpec {
    pub fn new(family: Family, dimension: usize, n_train: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if family == Family::Logreg && n_train < 2 {
            return Err(Error::Config("n_train must be >= 2 for logreg".into()));
        }
        Ok(Self {
            family,
            dimension,
            n_train: if family == Family::Logreg { n_train } else { 0 },
        })
    }

    pub fn with_defaults(family: Family) -> Self {
        Self {
            family,
            dimension: family.default_dimension(),
            n_train: if family == Family::Logreg { DEFAULT_N_TRAIN } else { 0 },
        }
    }

    pub fn solution_dim(&self) -> usize {
        match self.family {
            Family::Quadratic | Family::Linear => self.dimension,
            Family::Logreg => self.dimension + 1,
        }
    }

    pub fn theta_dim(&self) -> usize {
        let n = self.dimension;
        match self.family {
            Family::Quadratic => 2 * n,
            Family::Linear => n * n + n,
            Family::Logreg => self.n_train * (n + 1),
        }
    }

    pub fn descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor {
            family: self.family,
            solution_dim: self.solution_dim(),
            theta_dim: self.theta_dim(),
            search_box: self.search_box(),
        }
    }

    pub fn search_box(&self) -> SearchBox {
        SearchBox::symmetric(self.solution_dim(), self.family.box_half_width())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Task> {
        Ok(match self.family {
            Family::Quadratic => Task::Quadratic(QuadraticTask::sample(self.dimension, rng)?),
            Family::Linear => Task::Linear(LinearTask::sample(self.dimension, rng)?),
            Family::Logreg => {
                Task::Logreg(LogRegTask::sample(self.dimension, self.n_train, rng)?)
            }
        })
    }
}

/// One sampled `θ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Quadratic(QuadraticTask),
    Linear(LinearTask),
    Logreg(LogRegTask),
}

impl Task {
    pub fn family(&self) -> Family {
        match self {
            Task::Quadratic(_) => Family::Quadratic,
            Task::Linear(_) => Family::Linear,
            Task::Logreg(_) => Family::Logreg,
        }
    }

    pub fn spec(&self) -> FamilySpec {
        match self {
            Task::Quadratic(t) => FamilySpec::with_defaults(Family::Quadratic).resized(t.dim(), 0),
            Task::Linear(t) => FamilySpec::with_defaults(Family::Linear).resized(t.dim(), 0),
            Task::Logreg(t) => FamilySpec::with_defaults(Family::Logreg).resized(t.n, t.n_train()),
        }
    }

    pub fn solution_dim(&self) -> usize {
        self.spec().solution_dim()
    }

    pub fn search_box(&self) -> SearchBox {
        self.spec().search_box()
    }

    pub fn fitness(&self, x: &[f64]) -> Result<f64> {
        match self {
            Task::Quadratic(t) => t.fitness(x),
            Task::Linear(t) => t.fitness(x),
            Task::Logreg(t) => t.fitness(x),
        }
    }

    pub fn oracle(&self) -> Result<Vec<f64>> {
        match self {
            Task::Quadratic(t) => t.oracle(),
            Task::Linear(t) => Ok(t.oracle()),
            Task::Logreg(t) => t.oracle(),
        }
    }

    pub fn encode_theta(&self) -> Vec<f64> {
        match self {
            Task::Quadratic(t) => t.encode_theta(),
            Task::Linear(t) => t.encode_theta(),
            Task::Logreg(t) => t.encode_theta(),
        }
    }
}

impl FamilySpec {
    fn resized(mut self, dimension: usize, n_train: usize) -> Self {
        self.dimension = dimension;
        if self.family == Family::Logreg {
            self.n_train = n_train;
        }
        self
    }
}
