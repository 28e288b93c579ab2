//! Per-family solution quality: the optimality gap for quadratics, the
//! residual norm for linear systems, held-out recognition for logistic fits.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tasks::{Family, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    QuadFgap,
    LinResidual,
    Recognition,
}

impl MetricKind {
    pub fn for_family(family: Family) -> Self {
        match family {
            Family::Quadratic => MetricKind::QuadFgap,
            Family::Linear => MetricKind::LinResidual,
            Family::Logreg => MetricKind::Recognition,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::QuadFgap => "quad_fgap",
            MetricKind::LinResidual => "lin_residual",
            MetricKind::Recognition => "recognition",
        }
    }

    /// Whether smaller values are better.
    pub fn lower_is_better(self) -> bool {
        !matches!(self, MetricKind::Recognition)
    }
}

/// Caches `f(x*)` so repeated evaluations against one task stay cheap.
pub struct MetricEvaluator<'a> {
    task: &'a Task,
    optimum_fitness: f64,
}

impl<'a> MetricEvaluator<'a> {
    pub fn new(task: &'a Task) -> Result<Self> {
        let optimum_fitness = match task {
            Task::Quadratic(t) => t.fitness(&t.oracle()?)?,
            _ => 0.0,
        };
        Ok(Self {
            task,
            optimum_fitness,
        })
    }

    pub fn kind(&self) -> MetricKind {
        MetricKind::for_family(self.task.family())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self.task {
            Task::Quadratic(t) => Ok((t.fitness(x)? - self.optimum_fitness).abs()),
            Task::Linear(t) => Ok(t.fitness(x)?.sqrt()),
            Task::Logreg(t) => t.recognition(x),
        }
    }
}

pub fn metric(task: &Task, x_sol: &[f64]) -> Result<f64> {
    MetricEvaluator::new(task)?.eval(x_sol)
}
