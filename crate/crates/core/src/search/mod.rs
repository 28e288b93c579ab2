//! Search procedures over a family's search box: blind search, an elitist
//! GA with classic or learned recombination, and the one-shot network solve.
//!
//! Every procedure yields a [`SearchTrace`] with one entry per generation,
//! entry 0 describing the initial batch. Population-based strategies spend
//! exactly `children` fitness evaluations per entry.

pub mod operators;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::harness::metric::MetricEvaluator;
use crate::nn::Mlp;
use crate::tasks::{SearchBox, Task};

pub use operators::{mutate, netga_child, one_parent_input, two_parent_input, uniform_crossover};

pub type SearchRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "blind")]
    Blind,
    #[serde(rename = "classic_ga")]
    ClassicGa,
    #[serde(rename = "net_d")]
    NetD,
    #[serde(rename = "net_ga")]
    NetGa,
    #[serde(rename = "net_1p")]
    Net1p,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Blind,
        Strategy::ClassicGa,
        Strategy::NetD,
        Strategy::NetGa,
        Strategy::Net1p,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Blind => "blind",
            Strategy::ClassicGa => "classic_ga",
            Strategy::NetD => "net_d",
            Strategy::NetGa => "net_ga",
            Strategy::Net1p => "net_1p",
        }
    }

    /// Stable identifier used for seed derivation; independent of list order.
    pub fn id(self) -> u64 {
        match self {
            Strategy::Blind => 0,
            Strategy::ClassicGa => 1,
            Strategy::NetD => 2,
            Strategy::NetGa => 3,
            Strategy::Net1p => 4,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub fitness: f64,
}

impl Candidate {
    pub fn evaluate(task: &Task, x: Vec<f64>) -> Result<Self> {
        let fitness = task.fitness(&x)?;
        Ok(Self { x, fitness })
    }
}

pub type Population = Vec<Candidate>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub survivors: usize,
    pub children: usize,
    pub mutation_sigma: f64,
    pub generations: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            survivors: 10,
            children: 20,
            mutation_sigma: 0.1,
            generations: 100,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.survivors < 2 {
            return Err(Error::Config("ga.survivors must be >= 2".into()));
        }
        if self.children == 0 {
            return Err(Error::Config("ga.children must be >= 1".into()));
        }
        if !(self.mutation_sigma > 0.0 && self.mutation_sigma.is_finite()) {
            return Err(Error::Config("ga.mutation_sigma must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub strategy: Strategy,
    pub best_fitness: Vec<f64>,
    pub best_error: Vec<f64>,
    /// Fitness evaluations consumed per recorded entry; zero for the one-shot solve.
    pub evaluations_per_step: usize,
    pub constant: bool,
}

impl SearchTrace {
    pub fn len(&self) -> usize {
        self.best_fitness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best_fitness.is_empty()
    }
}

/// Produces one child per ordered parent pair.
pub trait Breeder {
    fn breed(&mut self, parents: &[(&[f64], &[f64])], rng: &mut SearchRng) -> Result<Vec<Vec<f64>>>;
}

impl<F> Breeder for F
where
    F: FnMut(&[f64], &[f64], &mut SearchRng) -> Result<Vec<f64>>,
{
    fn breed(&mut self, parents: &[(&[f64], &[f64])], rng: &mut SearchRng) -> Result<Vec<Vec<f64>>> {
        parents.iter().map(|(a, b)| self(a, b, rng)).collect()
    }
}

/// Uniform crossover followed by Gaussian mutation.
pub struct ClassicBreeder<'a> {
    pub sigma: f64,
    pub search_box: &'a SearchBox,
}

impl Breeder for ClassicBreeder<'_> {
    fn breed(&mut self, parents: &[(&[f64], &[f64])], rng: &mut SearchRng) -> Result<Vec<Vec<f64>>> {
        parents
            .iter()
            .map(|(a, b)| {
                let child = uniform_crossover(a, b, rng)?;
                Ok(mutate(&child, self.sigma, self.search_box, rng))
            })
            .collect()
    }
}

/// Learned recombination: parents are mutated, then mapped through the network
/// together with `θ`. Two-parent or one-parent input layout.
pub struct NetBreeder<'a> {
    pub net: &'a Mlp,
    pub theta: &'a [f64],
    pub sigma: f64,
    pub search_box: &'a SearchBox,
    pub two_parents: bool,
}

impl Breeder for NetBreeder<'_> {
    fn breed(&mut self, parents: &[(&[f64], &[f64])], rng: &mut SearchRng) -> Result<Vec<Vec<f64>>> {
        let dim = self.search_box.dim();
        let blocks = if self.two_parents { 2 } else { 1 };
        operators::check_net_dims(self.net, blocks * dim + self.theta.len(), dim)?;
        let mut inputs = Vec::with_capacity(parents.len() * self.net.input_dim());
        for (a, b) in parents {
            check_len("parent", dim, a.len())?;
            check_len("parent", dim, b.len())?;
            let m1 = mutate(a, self.sigma, self.search_box, rng);
            if self.two_parents {
                let m2 = mutate(b, self.sigma, self.search_box, rng);
                inputs.extend(two_parent_input(&m1, &m2, self.theta));
            } else {
                inputs.extend(one_parent_input(&m1, self.theta));
            }
        }
        let out = self.net.forward_batch(&inputs, parents.len());
        Ok(out
            .chunks_exact(dim)
            .map(|c| self.search_box.clip(c))
            .collect())
    }
}

pub fn init_population(task: &Task, size: usize, rng: &mut SearchRng) -> Result<Population> {
    let search_box = task.search_box();
    (0..size)
        .map(|_| Candidate::evaluate(task, search_box.sample(rng)))
        .collect()
}

fn best(population: &[Candidate]) -> &Candidate {
    population
        .iter()
        .reduce(|a, b| if b.fitness < a.fitness { b } else { a })
        .expect("non-empty population")
}

/// Truncation selection, breeding from random ordered pairs of distinct
/// survivors, and an elitist union `survivors ∪ children`.
pub fn ga_step(
    mut population: Population,
    task: &Task,
    cfg: &GaConfig,
    breeder: &mut dyn Breeder,
    rng: &mut SearchRng,
) -> Result<Population> {
    cfg.validate()?;
    if population.len() < cfg.survivors {
        return Err(Error::PopulationTooSmall {
            size: population.len(),
            survivors: cfg.survivors,
        });
    }
    population.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
    population.truncate(cfg.survivors);

    let pairs: Vec<(usize, usize)> = (0..cfg.children)
        .map(|_| {
            let i = rng.gen_range(0..cfg.survivors);
            let mut j = rng.gen_range(0..cfg.survivors - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();
    let parents: Vec<(&[f64], &[f64])> = pairs
        .iter()
        .map(|&(i, j)| (population[i].x.as_slice(), population[j].x.as_slice()))
        .collect();
    let children = breeder.breed(&parents, rng)?;
    if children.len() != cfg.children {
        return Err(Error::Config(format!(
            "breeder returned {} children, expected {}",
            children.len(),
            cfg.children
        )));
    }
    for x in children {
        population.push(Candidate::evaluate(task, x)?);
    }
    Ok(population)
}

fn run_ga(
    strategy: Strategy,
    task: &Task,
    cfg: &GaConfig,
    breeder: &mut dyn Breeder,
    rng: &mut SearchRng,
) -> Result<SearchTrace> {
    cfg.validate()?;
    let metric = MetricEvaluator::new(task)?;
    let mut population = init_population(task, cfg.children, rng)?;
    let mut trace = SearchTrace {
        strategy,
        best_fitness: Vec::with_capacity(cfg.generations + 1),
        best_error: Vec::with_capacity(cfg.generations + 1),
        evaluations_per_step: cfg.children,
        constant: false,
    };
    let record = |population: &Population, trace: &mut SearchTrace| -> Result<()> {
        let b = best(population);
        trace.best_fitness.push(b.fitness);
        trace.best_error.push(metric.eval(&b.x)?);
        Ok(())
    };
    record(&population, &mut trace)?;
    for _ in 0..cfg.generations {
        population = ga_step(population, task, cfg, breeder, rng)?;
        record(&population, &mut trace)?;
    }
    Ok(trace)
}

/// Samples `batch` uniform candidates per step and keeps the best so far.
pub fn blind_search(task: &Task, iterations: usize, batch: usize, rng: &mut SearchRng) -> Result<SearchTrace> {
    if batch == 0 {
        return Err(Error::Config("blind search batch must be >= 1".into()));
    }
    let metric = MetricEvaluator::new(task)?;
    let search_box = task.search_box();
    let mut best_so_far: Option<Candidate> = None;
    let mut trace = SearchTrace {
        strategy: Strategy::Blind,
        best_fitness: Vec::with_capacity(iterations + 1),
        best_error: Vec::with_capacity(iterations + 1),
        evaluations_per_step: batch,
        constant: false,
    };
    for _ in 0..=iterations {
        for _ in 0..batch {
            let c = Candidate::evaluate(task, search_box.sample(rng))?;
            if best_so_far.as_ref().is_none_or(|b| c.fitness < b.fitness) {
                best_so_far = Some(c);
            }
        }
        let b = best_so_far.as_ref().unwrap();
        trace.best_fitness.push(b.fitness);
        trace.best_error.push(metric.eval(&b.x)?);
    }
    Ok(trace)
}

pub fn classic_ga(task: &Task, cfg: &GaConfig, rng: &mut SearchRng) -> Result<SearchTrace> {
    let search_box = task.search_box();
    let mut breeder = ClassicBreeder {
        sigma: cfg.mutation_sigma,
        search_box: &search_box,
    };
    run_ga(Strategy::ClassicGa, task, cfg, &mut breeder, rng)
}

/// One network evaluation `Net_D(θ)`, reported as a constant series of `length` entries.
pub fn netd_solve(net: &Mlp, task: &Task, length: usize) -> Result<SearchTrace> {
    let spec = task.spec();
    operators::check_net_dims(net, spec.theta_dim(), spec.solution_dim())?;
    let x = task.search_box().clip(&net.forward(&task.encode_theta())?);
    let fitness = task.fitness(&x)?;
    let error = MetricEvaluator::new(task)?.eval(&x)?;
    Ok(SearchTrace {
        strategy: Strategy::NetD,
        best_fitness: vec![fitness; length],
        best_error: vec![error; length],
        evaluations_per_step: 0,
        constant: true,
    })
}

fn net_search(net: &Mlp, task: &Task, cfg: &GaConfig, two_parents: bool, rng: &mut SearchRng) -> Result<SearchTrace> {
    let search_box = task.search_box();
    let theta = task.encode_theta();
    let mut breeder = NetBreeder {
        net,
        theta: &theta,
        sigma: cfg.mutation_sigma,
        search_box: &search_box,
        two_parents,
    };
    let blocks = if two_parents { 2 } else { 1 };
    operators::check_net_dims(net, blocks * search_box.dim() + theta.len(), search_box.dim())?;
    let strategy = if two_parents { Strategy::NetGa } else { Strategy::Net1p };
    run_ga(strategy, task, cfg, &mut breeder, rng)
}

/// GA whose recombination is the trained two-parent operator.
pub fn net_ga(net: &Mlp, task: &Task, cfg: &GaConfig, rng: &mut SearchRng) -> Result<SearchTrace> {
    net_search(net, task, cfg, true, rng)
}

/// GA whose recombination is the trained one-parent operator.
pub fn net_1p(net: &Mlp, task: &Task, cfg: &GaConfig, rng: &mut SearchRng) -> Result<SearchTrace> {
    net_search(net, task, cfg, false, rng)
}
