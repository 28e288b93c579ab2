//! Dense feedforward network with a fixed tapering topology.
//!
//! Hidden widths follow `100·H, 100·(H−1), …, 100` for a hidden depth `H`.
//! Hidden layers share one nonlinearity, the output layer is affine.
//! Weights are row-major `(out_dim, in_dim)`.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Width step between consecutive hidden layers.
pub const WIDTH_UNIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Activation {
    #[default]
    #[serde(rename = "relu")]
    Relu,
    #[serde(rename = "tanh")]
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `h`.
    #[inline]
    fn derivative_from_output(self, h: f64) -> f64 {
        match self {
            Activation::Relu => {
                if h > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - h * h,
        }
    }
}

/// One affine layer, also used as the shape of gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `(out_dim, in_dim)`: `weights[i * in_dim + j]` maps input `j` to neuron `i`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.in_dim + col]
    }

    pub fn same_shape(&self, other: &Dense) -> bool {
        self.in_dim == other.in_dim
            && self.out_dim == other.out_dim
            && self.weights.len() == other.weights.len()
            && self.bias.len() == other.bias.len()
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Parameter-shaped tensors (gradients, moment accumulators).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    /// Iterates every scalar in the fixed layer order: weights then bias, per layer.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    hidden_depth: usize,
    output_dim: usize,
    activation: Activation,
    layer_dims: Vec<usize>,
    layers: Vec<Dense>,
}

/// `[input_dim, 100H, 100(H-1), …, 100, output_dim]`.
pub fn tapered_layer_dims(input_dim: usize, hidden_depth: usize, output_dim: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hidden_depth + 2);
    dims.push(input_dim);
    dims.extend((1..=hidden_depth).rev().map(|k| WIDTH_UNIT * k));
    dims.push(output_dim);
    dims
}

impl Mlp {
    /// Builds the tapered network with Glorot-uniform weights and zero biases.
    pub fn new(
        input_dim: usize,
        hidden_depth: usize,
        output_dim: usize,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_depth == 0 || output_dim == 0 {
            return Err(Error::Config(format!(
                "network dims must be positive (input {input_dim}, hidden depth {hidden_depth}, output {output_dim})"
            )));
        }
        let dims = tapered_layer_dims(input_dim, hidden_depth, output_dim);
        let mut net = Self::with_layer_dims(&dims, activation, seed)?;
        net.hidden_depth = hidden_depth;
        Ok(net)
    }

    /// Arbitrary topology; used for small nets in gradient checks and tests.
    /// Such nets only serialize when their widths follow the tapered law.
    pub fn with_layer_dims(dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer dims {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit);
                let mut layer = Dense::zeros(fan_in, fan_out);
                for w in &mut layer.weights {
                    *w = dist.sample(&mut rng);
                }
                layer
            })
            .collect();
        Ok(Self {
            input_dim: dims[0],
            hidden_depth: dims.len() - 2,
            output_dim: dims[dims.len() - 1],
            activation,
            layer_dims: dims.to_vec(),
            layers,
        })
    }

    /// Assembles a net from explicit layers, validating the shape chain.
    pub fn from_layers(activation: Activation, layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::MalformedModel("no layers".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::MalformedModel(format!("layer {k} has a zero dimension")));
            }
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(Error::MalformedModel(format!(
                    "layer {k}: weights/bias sizes do not match {}x{}",
                    l.out_dim, l.in_dim
                )));
            }
            if k > 0 && layers[k - 1].out_dim != l.in_dim {
                return Err(Error::MalformedModel(format!(
                    "layer {k} expects {} inputs but layer {} produces {}",
                    l.in_dim,
                    k - 1,
                    layers[k - 1].out_dim
                )));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::MalformedModel(format!("layer {k} has non-finite parameters")));
            }
        }
        let mut layer_dims = vec![layers[0].in_dim];
        layer_dims.extend(layers.iter().map(|l| l.out_dim));
        Ok(Self {
            input_dim: layer_dims[0],
            hidden_depth: layers.len() - 1,
            output_dim: *layer_dims.last().unwrap(),
            activation,
            layer_dims,
            layers,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn hidden_depth(&self) -> usize {
        self.hidden_depth
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// True when hidden widths are exactly `100H, …, 100`.
    pub fn is_tapered(&self) -> bool {
        self.layer_dims == tapered_layer_dims(self.input_dim, self.hidden_depth, self.output_dim)
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_len("mlp input", self.input_dim, input.len())?;
        Ok(self.forward_batch(input, 1))
    }

    /// Forward pass over `rows` row-major inputs. Panics on a length mismatch.
    pub fn forward_batch(&self, inputs: &[f64], rows: usize) -> Vec<f64> {
        assert_eq!(inputs.len(), rows * self.input_dim, "batch input length");
        let mut current = inputs.to_vec();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; rows * layer.out_dim];
            affine(layer, &current, rows, &mut next);
            if k != last {
                for v in &mut next {
                    *v = self.activation.apply(*v);
                }
            }
            current = next;
        }
        current
    }

    /// Mean over the batch of the squared Euclidean error, with exact gradients.
    pub fn loss_grad(&self, batch: &[(Vec<f64>, Vec<f64>)]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let rows = batch.len();
        let mut inputs = Vec::with_capacity(rows * self.input_dim);
        let mut targets = Vec::with_capacity(rows * self.output_dim);
        for (x, t) in batch {
            check_len("batch input", self.input_dim, x.len())?;
            check_len("batch target", self.output_dim, t.len())?;
            inputs.extend_from_slice(x);
            targets.extend_from_slice(t);
        }
        let mut grads = Gradients::zeros_like(self);
        let loss = self.loss_grad_flat(&inputs, &targets, rows, &mut grads);
        Ok((loss, grads))
    }

    /// Flat-buffer variant of [`Mlp::loss_grad`] writing into `grads`.
    /// Panics on shape mismatch.
    pub fn loss_grad_flat(
        &self,
        inputs: &[f64],
        targets: &[f64],
        rows: usize,
        grads: &mut Gradients,
    ) -> f64 {
        assert!(rows > 0, "empty batch");
        assert_eq!(inputs.len(), rows * self.input_dim, "batch input length");
        assert_eq!(targets.len(), rows * self.output_dim, "batch target length");
        assert_eq!(grads.layers.len(), self.layers.len(), "gradient layer count");

        // activations[k] is the input to layer k; the last entry is the output.
        let last = self.layers.len() - 1;
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; rows * layer.out_dim];
            affine(layer, &activations[k], rows, &mut next);
            if k != last {
                for v in &mut next {
                    *v = self.activation.apply(*v);
                }
            }
            activations.push(next);
        }

        let output = &activations[self.layers.len()];
        let scale = 2.0 / rows as f64;
        let mut loss = 0.0;
        let mut delta: Vec<f64> = output
            .iter()
            .zip(targets)
            .map(|(o, t)| {
                let e = o - t;
                loss += e * e;
                scale * e
            })
            .collect();
        loss /= rows as f64;

        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let grad = &mut grads.layers[k];
            assert!(grad.same_shape(layer), "gradient shape for layer {k}");
            let input = &activations[k];
            // dW = deltaᵀ · input
            gemm(
                layer.out_dim,
                rows,
                layer.in_dim,
                (&delta, 1, layer.out_dim as isize),
                (input, layer.in_dim as isize, 1),
                0.0,
                &mut grad.weights,
            );
            grad.bias.iter_mut().for_each(|b| *b = 0.0);
            for row in delta.chunks_exact(layer.out_dim) {
                for (b, d) in grad.bias.iter_mut().zip(row) {
                    *b += d;
                }
            }
            if k > 0 {
                let mut prev = vec![0.0; rows * layer.in_dim];
                // d(input) = delta · W
                gemm(
                    rows,
                    layer.out_dim,
                    layer.in_dim,
                    (&delta, layer.out_dim as isize, 1),
                    (&layer.weights, layer.in_dim as isize, 1),
                    0.0,
                    &mut prev,
                );
                for (p, h) in prev.iter_mut().zip(input) {
                    *p *= self.activation.derivative_from_output(*h);
                }
                delta = prev;
            }
        }
        loss
    }
}

/// `out (rows × out_dim) = input · Wᵀ + bias`.
fn affine(layer: &Dense, input: &[f64], rows: usize, out: &mut [f64]) {
    for row in out.chunks_exact_mut(layer.out_dim) {
        row.copy_from_slice(&layer.bias);
    }
    gemm(
        rows,
        layer.in_dim,
        layer.out_dim,
        (input, layer.in_dim as isize, 1),
        (&layer.weights, 1, layer.in_dim as isize),
        1.0,
        out,
    );
}

/// `c (m × n) = a (m × k) · b (k × n) + beta · c` with `(slice, row_stride, col_stride)` operands.
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: (&[f64], isize, isize),
    b: (&[f64], isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    let extent = |rows: usize, cols: usize, rs: isize, cs: isize| {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows - 1) * rs as usize + (cols - 1) * cs as usize + 1
        }
    };
    assert!(a.0.len() >= extent(m, k, a.1, a.2), "gemm lhs too short");
    assert!(b.0.len() >= extent(k, n, b.1, b.2), "gemm rhs too short");
    assert_eq!(c.len(), m * n, "gemm output length");
    // SAFETY: operand extents were checked above; c is exclusively borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straightforward triple-loop forward pass, independent of the GEMM path.
    fn naive_forward(net: &Mlp, input: &[f64]) -> Vec<f64> {
        let mut h = input.to_vec();
        let last = net.layers().len() - 1;
        for (k, l) in net.layers().iter().enumerate() {
            let mut z = vec![0.0; l.out_dim];
            for i in 0..l.out_dim {
                let mut acc = l.bias[i];
                for j in 0..l.in_dim {
                    acc += l.weight(i, j) * h[j];
                }
                z[i] = if k == last {
                    acc
                } else {
                    match net.activation() {
                        Activation::Relu => acc.max(0.0),
                        Activation::Tanh => acc.tanh(),
                    }
                };
            }
            h = z;
        }
        h
    }

    #[test]
    fn tapered_dims_for_depth_five() {
        let net = Mlp::new(10, 5, 5, Activation::Relu, 0).unwrap();
        assert_eq!(net.layer_dims(), &[10, 500, 400, 300, 200, 100, 5]);
        let net = Mlp::new(3, 1, 2, Activation::Relu, 0).unwrap();
        assert_eq!(net.layer_dims(), &[3, 100, 2]);
        assert!(net.is_tapered());
    }

    #[test]
    fn architecture_law_for_depths_one_to_ten() {
        for h in 1..=10 {
            let net = Mlp::new(4, h, 3, Activation::Relu, h as u64).unwrap();
            let hidden: Vec<usize> = net.layer_dims()[1..=h].to_vec();
            let expected: Vec<usize> = (1..=h).rev().map(|k| 100 * k).collect();
            assert_eq!(hidden, expected);
            for (k, l) in net.layers().iter().enumerate() {
                assert_eq!(l.weights.len(), net.layer_dims()[k + 1] * net.layer_dims()[k]);
                assert_eq!(l.bias.len(), net.layer_dims()[k + 1]);
                assert!(l.bias.iter().all(|b| *b == 0.0));
            }
        }
    }

    #[test]
    fn rejects_zero_dims() {
        assert!(Mlp::new(0, 1, 1, Activation::Relu, 0).is_err());
        assert!(Mlp::new(1, 0, 1, Activation::Relu, 0).is_err());
        assert!(Mlp::new(1, 1, 0, Activation::Relu, 0).is_err());
    }

    #[test]
    fn same_seed_gives_identical_parameters() {
        let a = Mlp::new(7, 3, 4, Activation::Relu, 99).unwrap();
        let b = Mlp::new(7, 3, 4, Activation::Relu, 99).unwrap();
        let bits = |n: &Mlp| -> Vec<u64> {
            n.layers()
                .iter()
                .flat_map(|l| l.weights.iter().chain(&l.bias).map(|v| v.to_bits()))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
        let c = Mlp::new(7, 3, 4, Activation::Relu, 100).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn glorot_limits_respected() {
        let net = Mlp::new(10, 2, 5, Activation::Relu, 1).unwrap();
        for l in net.layers() {
            let s = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= s));
        }
    }

    #[test]
    fn zero_weights_output_equals_last_bias() {
        let mut net = Mlp::new(4, 2, 3, Activation::Relu, 5).unwrap();
        for l in net.layers_mut() {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let last = net.layers_mut().last_mut().unwrap();
        last.bias = vec![0.25, -1.5, 3.0];
        let out = net.forward(&[9.0, -2.0, 0.1, 7.0]).unwrap();
        assert_eq!(out, vec![0.25, -1.5, 3.0]);
    }

    #[test]
    fn relu_blocks_negative_preactivation() {
        let hidden = Dense {
            in_dim: 1,
            out_dim: 1,
            weights: vec![-2.0],
            bias: vec![-0.5],
        };
        let out = Dense {
            in_dim: 1,
            out_dim: 1,
            weights: vec![1.0],
            bias: vec![0.0],
        };
        let net = Mlp::from_layers(Activation::Relu, vec![hidden, out]).unwrap();
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn forward_matches_naive_reimplementation() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (act, seed) in [(Activation::Relu, 1), (Activation::Tanh, 2)] {
            let net = Mlp::new(12, 3, 4, act, seed).unwrap();
            for _ in 0..20 {
                let x: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let fast = net.forward(&x).unwrap();
                let slow = naive_forward(&net, &x);
                for (f, s) in fast.iter().zip(&slow) {
                    assert!((f - s).abs() <= 1e-12 * s.abs().max(1.0), "{f} vs {s}");
                }
            }
        }
    }

    #[test]
    fn batched_forward_matches_rowwise() {
        let net = Mlp::new(5, 2, 3, Activation::Tanh, 8).unwrap();
        let inputs: Vec<f64> = (0..15).map(|i| (i as f64 * 0.37).sin()).collect();
        let batched = net.forward_batch(&inputs, 3);
        for r in 0..3 {
            let single = net.forward(&inputs[r * 5..(r + 1) * 5]).unwrap();
            for (a, b) in single.iter().zip(&batched[r * 3..(r + 1) * 3]) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn forward_dimension_mismatch() {
        let net = Mlp::new(3, 1, 2, Activation::Relu, 0).unwrap();
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn scalar_linear_case_by_hand() {
        let layer = Dense {
            in_dim: 1,
            out_dim: 1,
            weights: vec![1.0],
            bias: vec![0.0],
        };
        let net = Mlp::from_layers(Activation::Relu, vec![layer]).unwrap();
        let (loss, g) = net.loss_grad(&[(vec![1.0], vec![0.0])]).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(g.layers[0].weights, vec![2.0]);
        assert_eq!(g.layers[0].bias, vec![2.0]);
    }

    #[test]
    fn perfect_fit_has_zero_loss_and_gradient() {
        let net = Mlp::new(3, 1, 2, Activation::Tanh, 4).unwrap();
        let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..4)
            .map(|i| {
                let x = vec![i as f64 * 0.1, -0.3, 0.7];
                let y = net.forward(&x).unwrap();
                (x, y)
            })
            .collect();
        let (loss, g) = net.loss_grad(&batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|v| v == 0.0));
    }

    #[test]
    fn loss_grad_errors() {
        let net = Mlp::new(2, 1, 1, Activation::Relu, 0).unwrap();
        assert!(matches!(net.loss_grad(&[]), Err(Error::EmptyBatch)));
        assert!(matches!(
            net.loss_grad(&[(vec![1.0], vec![0.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            net.loss_grad(&[(vec![1.0, 2.0], vec![0.0, 1.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn from_layers_rejects_broken_chain() {
        let a = Dense::zeros(2, 3);
        let b = Dense::zeros(4, 1);
        assert!(Mlp::from_layers(Activation::Relu, vec![a, b]).is_err());
    }
}
