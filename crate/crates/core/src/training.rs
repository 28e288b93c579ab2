//! Fitting networks to oracle solutions on an endless stream of sampled tasks.
//!
//! * `net-d` maps `θ` to `x*`.
//! * `net-ga` maps `[x1 ‖ x2 ‖ θ]` to `x*`, with parents drawn uniformly in an
//!   ∞-norm ball of `parent_radius` around `x*` (then clipped to the box).
//! * `net-1p` is the single-parent analogue, `[x1 ‖ θ]`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{io, optimizer_step, Activation, Gradients, Mlp, OptimizerState, TrainConfig};
use crate::search::{one_parent_input, two_parent_input};
use crate::seeds::derive_seed;
use crate::tasks::{Family, FamilySpec, Task};

pub const DEFAULT_PARENT_RADIUS: f64 = 1.0;
pub const HELDOUT_TASKS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorKind {
    #[serde(rename = "net-d")]
    NetD,
    #[serde(rename = "net-ga")]
    NetGa,
    #[serde(rename = "net-1p")]
    Net1p,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 3] = [OperatorKind::NetD, OperatorKind::NetGa, OperatorKind::Net1p];

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::NetD => "net-d",
            OperatorKind::NetGa => "net-ga",
            OperatorKind::Net1p => "net-1p",
        }
    }

    pub fn input_dim(self, spec: &FamilySpec) -> usize {
        let (x, theta) = (spec.solution_dim(), spec.theta_dim());
        match self {
            OperatorKind::NetD => theta,
            OperatorKind::NetGa => 2 * x + theta,
            OperatorKind::Net1p => x + theta,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown operator {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedOperator {
    pub net: Mlp,
    pub spec: FamilySpec,
    pub kind: OperatorKind,
    pub parent_radius: f64,
    pub train_config: TrainConfig,
    pub initial_heldout_loss: f64,
    pub final_heldout_loss: f64,
}

/// One supervised pair for the given operator: network input and the oracle target.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub task: Task,
    pub parents: Vec<Vec<f64>>,
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

/// `clip(x* + u)` with `u` uniform in `[-radius, radius]` per coordinate.
pub fn sample_parent<R: Rng + ?Sized>(target: &[f64], radius: f64, spec: &FamilySpec, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = target
        .iter()
        .map(|t| t + rng.gen_range(-radius..=radius))
        .collect();
    spec.search_box().clip_in_place(&mut x);
    x
}

pub fn sample_example<R: Rng + ?Sized>(
    kind: OperatorKind,
    spec: &FamilySpec,
    parent_radius: f64,
    rng: &mut R,
) -> Result<Example> {
    let task = spec.sample(rng)?;
    let target = task.oracle()?;
    let theta = task.encode_theta();
    let (parents, input) = match kind {
        OperatorKind::NetD => (Vec::new(), theta),
        OperatorKind::NetGa => {
            let x1 = sample_parent(&target, parent_radius, spec, rng);
            let x2 = sample_parent(&target, parent_radius, spec, rng);
            let input = two_parent_input(&x1, &x2, &theta);
            (vec![x1, x2], input)
        }
        OperatorKind::Net1p => {
            let x1 = sample_parent(&target, parent_radius, spec, rng);
            let input = one_parent_input(&x1, &theta);
            (vec![x1], input)
        }
    };
    Ok(Example {
        task,
        parents,
        input,
        target,
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Mean `|net(input) − x*|²` over `n_tasks` fresh examples drawn from `rng`.
pub fn eval_net<R: Rng + ?Sized>(
    net: &Mlp,
    kind: OperatorKind,
    spec: &FamilySpec,
    parent_radius: f64,
    n_tasks: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_tasks == 0 {
        return Err(Error::Config("evaluation needs at least one task".into()));
    }
    check_operator_dims(net, kind, spec)?;
    let mut inputs = Vec::with_capacity(n_tasks * net.input_dim());
    let mut targets = Vec::with_capacity(n_tasks * net.output_dim());
    for _ in 0..n_tasks {
        let ex = sample_example(kind, spec, parent_radius, rng)?;
        inputs.extend(ex.input);
        targets.extend(ex.target);
    }
    let out = net.forward_batch(&inputs, n_tasks);
    let dim = net.output_dim();
    let total: f64 = out
        .chunks_exact(dim)
        .zip(targets.chunks_exact(dim))
        .map(|(o, t)| squared_distance(o, t))
        .sum();
    Ok(total / n_tasks as f64)
}

pub fn eval_operator<R: Rng + ?Sized>(op: &TrainedOperator, n_tasks: usize, rng: &mut R) -> Result<f64> {
    eval_net(&op.net, op.kind, &op.spec, op.parent_radius, n_tasks, rng)
}

pub fn check_operator_dims(net: &Mlp, kind: OperatorKind, spec: &FamilySpec) -> Result<()> {
    let (want_in, want_out) = (kind.input_dim(spec), spec.solution_dim());
    if net.input_dim() != want_in || net.output_dim() != want_out {
        return Err(Error::IncompatibleOperator(format!(
            "{kind} for {} (N={}) needs {want_in} -> {want_out}, network is {} -> {}",
            spec.family,
            spec.dimension,
            net.input_dim(),
            net.output_dim()
        )));
    }
    Ok(())
}

/// Stream-seed roles derived from `TrainConfig::seed`.
const SEED_INIT: u64 = 0;
const SEED_DATA: u64 = 1;
const SEED_HELDOUT: u64 = 2;

pub fn heldout_rng(train_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(train_seed, &[SEED_HELDOUT]))
}

/// Trains an operator; `progress` is called after every optimizer step with the batch loss.
pub fn train_operator_with_progress(
    spec: FamilySpec,
    kind: OperatorKind,
    hidden_depth: usize,
    cfg: &TrainConfig,
    parent_radius: f64,
    progress: &mut dyn FnMut(usize, f64),
) -> Result<TrainedOperator> {
    cfg.validate()?;
    if !(parent_radius > 0.0 && parent_radius.is_finite()) {
        return Err(Error::Config("parent_radius must be > 0".into()));
    }
    let mut net = Mlp::new(
        kind.input_dim(&spec),
        hidden_depth,
        spec.solution_dim(),
        Activation::Relu,
        derive_seed(cfg.seed, &[SEED_INIT]),
    )?;
    let initial_heldout_loss = eval_net(
        &net,
        kind,
        &spec,
        parent_radius,
        HELDOUT_TASKS,
        &mut heldout_rng(cfg.seed),
    )?;

    let mut data_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[SEED_DATA]));
    let mut state = OptimizerState::new(&net, cfg.optimizer);
    let mut grads = Gradients::zeros_like(&net);
    let (in_dim, out_dim) = (net.input_dim(), net.output_dim());
    let mut inputs = Vec::with_capacity(cfg.batch_size * in_dim);
    let mut targets = Vec::with_capacity(cfg.batch_size * out_dim);
    for step in 0..cfg.steps {
        inputs.clear();
        targets.clear();
        for _ in 0..cfg.batch_size {
            let ex = sample_example(kind, &spec, parent_radius, &mut data_rng)?;
            inputs.extend(ex.input);
            targets.extend(ex.target);
        }
        let loss = net.loss_grad_flat(&inputs, &targets, cfg.batch_size, &mut grads);
        optimizer_step(&mut net, &grads, &mut state, cfg)?;
        progress(step, loss);
    }

    let final_heldout_loss = eval_net(
        &net,
        kind,
        &spec,
        parent_radius,
        HELDOUT_TASKS,
        &mut heldout_rng(cfg.seed),
    )?;
    Ok(TrainedOperator {
        net,
        spec,
        kind,
        parent_radius,
        train_config: cfg.clone(),
        initial_heldout_loss,
        final_heldout_loss,
    })
}

pub fn train_operator(
    spec: FamilySpec,
    kind: OperatorKind,
    hidden_depth: usize,
    cfg: &TrainConfig,
    parent_radius: f64,
) -> Result<TrainedOperator> {
    train_operator_with_progress(spec, kind, hidden_depth, cfg, parent_radius, &mut |_, _| {})
}

pub fn train_net_d(spec: FamilySpec, hidden_depth: usize, cfg: &TrainConfig) -> Result<TrainedOperator> {
    train_operator(spec, OperatorKind::NetD, hidden_depth, cfg, DEFAULT_PARENT_RADIUS)
}

pub fn train_net_ga(
    spec: FamilySpec,
    hidden_depth: usize,
    cfg: &TrainConfig,
    parent_radius: f64,
) -> Result<TrainedOperator> {
    train_operator(spec, OperatorKind::NetGa, hidden_depth, cfg, parent_radius)
}

pub fn train_net_1p(
    spec: FamilySpec,
    hidden_depth: usize,
    cfg: &TrainConfig,
    parent_radius: f64,
) -> Result<TrainedOperator> {
    train_operator(spec, OperatorKind::Net1p, hidden_depth, cfg, parent_radius)
}

/// Sidecar written next to the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub operator: OperatorKind,
    pub family: Family,
    pub dimension: usize,
    #[serde(default)]
    pub n_train: usize,
    pub parent_radius: f64,
    pub train_config: TrainConfig,
    #[serde(default)]
    pub initial_heldout_loss: f64,
    pub final_heldout_loss: f64,
}

/// `model.json` → `model.manifest.json`.
pub fn manifest_path(model_path: &Path) -> PathBuf {
    let stem = model_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    model_path.with_file_name(format!("{stem}.manifest.json"))
}

impl TrainedOperator {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            operator: self.kind,
            family: self.spec.family,
            dimension: self.spec.dimension,
            n_train: self.spec.n_train,
            parent_radius: self.parent_radius,
            train_config: self.train_config.clone(),
            initial_heldout_loss: self.initial_heldout_loss,
            final_heldout_loss: self.final_heldout_loss,
        }
    }

    pub fn save(&self, model_path: &Path) -> Result<()> {
        io::save(&self.net, model_path)?;
        let path = manifest_path(model_path);
        let text = serde_json::to_string_pretty(&self.manifest())?;
        std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
    }

    pub fn load(model_path: &Path) -> Result<Self> {
        let net = io::load(model_path)?;
        let path = manifest_path(model_path);
        let text = std::fs::read_to_string(&path).map_err(|source| Error::ModelIo {
            path: path.clone(),
            source,
        })?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::MalformedModel(format!("{}: {e}", path.display())))?;
        let spec = FamilySpec::new(manifest.family, manifest.dimension, manifest.n_train)
            .map_err(|e| Error::IncompatibleOperator(e.to_string()))?;
        check_operator_dims(&net, manifest.operator, &spec)?;
        Ok(Self {
            net,
            spec,
            kind: manifest.operator,
            parent_radius: manifest.parent_radius,
            train_config: manifest.train_config,
            initial_heldout_loss: manifest.initial_heldout_loss,
            final_heldout_loss: manifest.final_heldout_loss,
        })
    }
}
