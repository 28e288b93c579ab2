//! Dense feedforward networks: forward pass, exact backpropagation, optimizers and model files.

pub mod io;
pub mod mlp;
pub mod optim;

pub use mlp::{Activation, Dense, Gradients, Mlp};
pub use optim::{optimizer_step, OptimizerKind, OptimizerState, TrainConfig};
