use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_len, Error, Result};
use crate::nn::Mlp;
use crate::tasks::SearchBox;

/// `x + N(0, sigma²)` per coordinate, clipped to the box.
pub fn mutate<R: Rng + ?Sized>(x: &[f64], sigma: f64, search_box: &SearchBox, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).expect("mutation sigma must be finite and non-negative");
    let mut out: Vec<f64> = x.iter().map(|v| v + normal.sample(rng)).collect();
    search_box.clip_in_place(&mut out);
    out
}

/// Each coordinate taken from `x1` or `x2` with probability ½.
pub fn uniform_crossover<R: Rng + ?Sized>(x1: &[f64], x2: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_len("crossover parents", x1.len(), x2.len())?;
    Ok(x1
        .iter()
        .zip(x2)
        .map(|(a, b)| if rng.gen_bool(0.5) { *a } else { *b })
        .collect())
}

/// Network input for the two-parent operator: `[x1 ‖ x2 ‖ θ]`.
pub fn two_parent_input(x1: &[f64], x2: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut input = Vec::with_capacity(x1.len() + x2.len() + theta.len());
    input.extend_from_slice(x1);
    input.extend_from_slice(x2);
    input.extend_from_slice(theta);
    input
}

/// Network input for the one-parent operator: `[x1 ‖ θ]`.
pub fn one_parent_input(x1: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut input = Vec::with_capacity(x1.len() + theta.len());
    input.extend_from_slice(x1);
    input.extend_from_slice(theta);
    input
}

pub(crate) fn check_net_dims(net: &Mlp, input_dim: usize, output_dim: usize) -> Result<()> {
    if net.input_dim() != input_dim || net.output_dim() != output_dim {
        return Err(Error::IncompatibleOperator(format!(
            "network maps {} -> {}, task needs {} -> {}",
            net.input_dim(),
            net.output_dim(),
            input_dim,
            output_dim
        )));
    }
    Ok(())
}

/// Mutates both parents, then lets the network produce the child.
pub fn netga_child<R: Rng + ?Sized>(
    net: &Mlp,
    x1: &[f64],
    x2: &[f64],
    theta: &[f64],
    sigma: f64,
    search_box: &SearchBox,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_len("crossover parents", x1.len(), x2.len())?;
    check_net_dims(net, 2 * x1.len() + theta.len(), x1.len())?;
    let m1 = mutate(x1, sigma, search_box, rng);
    let m2 = mutate(x2, sigma, search_box, rng);
    let mut child = net.forward(&two_parent_input(&m1, &m2, theta))?;
    search_box.clip_in_place(&mut child);
    Ok(child)
}
