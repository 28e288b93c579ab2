//! Genetic algorithms with trained neural crossover operators.
//!
//! The crate trains dense feedforward networks either to map task parameters
//! straight to a solution or to act as a task-conditioned crossover operator
//! inside an elitist GA, and benchmarks both against blind search and a
//! classic GA on three parametric families (separable quadratics, linear
//! systems and logistic-regression fitting).

pub mod error;
pub mod harness;
pub mod nn;
pub mod search;
pub mod seeds;
pub mod tasks;
pub mod training;

pub use error::{Error, Result};
