use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::mlp::{Dense, Gradients, Mlp};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum OptimizerKind {
    #[serde(rename = "plain-sgd")]
    PlainSgd,
    #[default]
    #[serde(rename = "adaptive-moments")]
    AdaptiveMoments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 200_000,
            batch_size: 64,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::AdaptiveMoments,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("train.steps must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("train.learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

/// First/second moment accumulators for adaptive moments; empty for plain SGD.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub first_moment: Vec<Dense>,
    pub second_moment: Vec<Dense>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(net: &Mlp, kind: OptimizerKind) -> Self {
        let zeros = || {
            net.layers()
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect::<Vec<_>>()
        };
        match kind {
            OptimizerKind::PlainSgd => Self {
                first_moment: Vec::new(),
                second_moment: Vec::new(),
                step: 0,
            },
            OptimizerKind::AdaptiveMoments => Self {
                first_moment: zeros(),
                second_moment: zeros(),
                step: 0,
            },
        }
    }
}

/// A moment fed only zero gradients decays into the subnormal range and then
/// sticks at the smallest subnormal, since `0.9 * 5e-324` rounds back up.
/// Subnormal arithmetic is very slow on common CPUs.
fn flush_subnormal(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

/// Applies one update to `net` in place.
pub fn optimizer_step(
    net: &mut Mlp,
    grads: &Gradients,
    state: &mut OptimizerState,
    cfg: &TrainConfig,
) -> Result<()> {
    let shapes_match = |layers: &[Dense]| {
        layers.len() == net.layers().len()
            && layers.iter().zip(net.layers()).all(|(a, b)| a.same_shape(b))
    };
    if !shapes_match(&grads.layers) {
        return Err(Error::Config("gradient shapes do not match the network".into()));
    }
    let lr = cfg.learning_rate;
    match cfg.optimizer {
        OptimizerKind::PlainSgd => {
            for (layer, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
                for (p, d) in layer.weights.iter_mut().zip(&g.weights) {
                    *p -= lr * d;
                }
                for (p, d) in layer.bias.iter_mut().zip(&g.bias) {
                    *p -= lr * d;
                }
            }
        }
        OptimizerKind::AdaptiveMoments => {
            if !shapes_match(&state.first_moment) || !shapes_match(&state.second_moment) {
                return Err(Error::Config("optimizer state shapes do not match the network".into()));
            }
            state.step += 1;
            let t = state.step as i32;
            let correction1 = 1.0 - ADAM_BETA1.powi(t);
            let correction2 = 1.0 - ADAM_BETA2.powi(t);
            let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
                for i in 0..p.len() {
                    m[i] = flush_subnormal(ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i]);
                    v[i] = flush_subnormal(ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i]);
                    let m_hat = m[i] / correction1;
                    let v_hat = v[i] / correction2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                }
            };
            for (((layer, g), m), v) in net
                .layers_mut()
                .iter_mut()
                .zip(&grads.layers)
                .zip(&mut state.first_moment)
                .zip(&mut state.second_moment)
            {
                update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
                update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
            }
        }
    }
    Ok(())
}
