//! Property checks shared by the proptest suite and the acceptance runner.
//! Every check recomputes its expectation from scratch instead of trusting the library.

#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use learned_crossover::harness::report::{write_curves_csv, CurvePoint, ExperimentReport, Metadata, StrategyCurve};
use learned_crossover::harness::{ExperimentConfig, MetricKind};
use learned_crossover::nn::{io, Activation, Mlp};
use learned_crossover::search::{ga_step, init_population, ClassicBreeder, GaConfig, SearchRng, Strategy};
use learned_crossover::tasks::{Family, FamilySpec, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain nested-loop forward pass; also reports the pre-activation closest to zero.
pub fn naive_forward(net: &Mlp, input: &[f64]) -> (Vec<f64>, f64) {
    let mut h = input.to_vec();
    let mut closest = f64::INFINITY;
    let n = net.layers().len();
    for (k, layer) in net.layers().iter().enumerate() {
        let mut z = layer.bias.clone();
        for (i, zi) in z.iter_mut().enumerate() {
            for (j, hj) in h.iter().enumerate() {
                *zi += layer.weight(i, j) * hj;
            }
        }
        if k + 1 < n {
            for v in z.iter_mut() {
                closest = closest.min(v.abs());
                *v = match net.activation() {
                    Activation::Relu => v.max(0.0),
                    Activation::Tanh => v.tanh(),
                };
            }
        }
        h = z;
    }
    (h, closest)
}

pub fn naive_loss(net: &Mlp, batch: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    batch
        .iter()
        .map(|(x, y)| {
            let (out, _) = naive_forward(net, x);
            out.iter().zip(y).map(|(o, t)| (o - t) * (o - t)).sum::<f64>()
        })
        .sum::<f64>()
        / batch.len() as f64
}

/// Worst violation of `|g − fd| ≤ rel·max(|g|, |fd|) + abs` over all parameters,
/// with central differences of step `h`. `None` when a ReLU pre-activation sits
/// close enough to its kink that finite differences are not meaningful.
pub fn gradient_check(net: &Mlp, batch: &[(Vec<f64>, Vec<f64>)], h: f64, rel: f64, abs: f64) -> Option<f64> {
    if net.activation() == Activation::Relu {
        let closest = batch
            .iter()
            .map(|(x, _)| naive_forward(net, x).1)
            .fold(f64::INFINITY, f64::min);
        if closest < 1e-3 {
            return None;
        }
    }
    let (_, grads) = net.loss_grad(batch).expect("valid batch");
    let mut worst = 0.0f64;
    let mut probe = net.clone();
    for (l, layer) in net.layers().iter().enumerate() {
        let n_w = layer.weights.len();
        for p in 0..n_w + layer.bias.len() {
            let analytic = if p < n_w {
                grads.layers[l].weights[p]
            } else {
                grads.layers[l].bias[p - n_w]
            };
            let mut eval_at = |delta: f64| {
                let layer = &mut probe.layers_mut()[l];
                let slot = if p < n_w {
                    &mut layer.weights[p]
                } else {
                    &mut layer.bias[p - n_w]
                };
                let orig = *slot;
                *slot = orig + delta;
                let loss = naive_loss(&probe, batch);
                let layer = &mut probe.layers_mut()[l];
                if p < n_w {
                    layer.weights[p] = orig;
                } else {
                    layer.bias[p - n_w] = orig;
                }
                loss
            };
            let fd = (eval_at(h) - eval_at(-h)) / (2.0 * h);
            let allowed = rel * analytic.abs().max(fd.abs()) + abs;
            worst = worst.max((analytic - fd).abs() / allowed);
        }
    }
    Some(worst)
}

pub fn random_batch(net: &Mlp, rows: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| {
            let x = (0..net.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = (0..net.output_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (x, y)
        })
        .collect()
}

/// Largest `‖Ax − b‖` of the linear oracle, recomputed with plain dot products.
pub fn linear_oracle_worst_residual(tasks: usize, seed: u64) -> f64 {
    let spec = FamilySpec::with_defaults(Family::Linear);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.dimension;
    let mut worst = 0.0f64;
    for _ in 0..tasks {
        let Task::Linear(task) = spec.sample(&mut rng).unwrap() else {
            unreachable!()
        };
        let x = task.oracle();
        let r: f64 = (0..n)
            .map(|i| {
                let row: f64 = (0..n).map(|j| task.a[i * n + j] * x[j]).sum();
                (row - task.b[i]).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    worst
}

/// Number of perturbed points that beat the quadratic oracle.
pub fn quadratic_minimality_violations(tasks: usize, perturbations: usize, seed: u64) -> usize {
    let spec = FamilySpec::with_defaults(Family::Quadratic);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..tasks {
        let task = spec.sample(&mut rng).unwrap();
        let x_star = task.oracle().unwrap();
        let f_star = task.fitness(&x_star).unwrap();
        for _ in 0..perturbations {
            let scale = 10f64.powf(rng.gen_range(-6.0..0.0));
            let y: Vec<f64> = x_star.iter().map(|v| v + scale * rng.gen_range(-1.0..1.0)).collect();
            if task.fitness(&y).unwrap() < f_star {
                violations += 1;
            }
        }
    }
    violations
}

/// Runs classic GAs and counts generations where the best fitness went up,
/// a population member's cached fitness disagreed with a fresh evaluation,
/// or a candidate left the search box.
pub fn elitism_violations(runs: usize, generations: usize, seed: u64) -> usize {
    let mut violations = 0;
    for run in 0..runs {
        let family = Family::ALL[run % Family::ALL.len()];
        let spec = FamilySpec::with_defaults(family);
        let mut rng = SearchRng::seed_from_u64(seed.wrapping_add(run as u64));
        let task = spec.sample(&mut rng).unwrap();
        let cfg = GaConfig {
            survivors: 4,
            children: 8,
            mutation_sigma: 0.3,
            generations,
        };
        let search_box = task.search_box();
        let mut breeder = ClassicBreeder {
            sigma: cfg.mutation_sigma,
            search_box: &search_box,
        };
        let mut pop = init_population(&task, cfg.children, &mut rng).unwrap();
        let mut best = pop.iter().map(|c| c.fitness).fold(f64::INFINITY, f64::min);
        for _ in 0..generations {
            pop = ga_step(pop, &task, &cfg, &mut breeder, &mut rng).unwrap();
            let now = pop.iter().map(|c| c.fitness).fold(f64::INFINITY, f64::min);
            if now > best {
                violations += 1;
            }
            best = now;
            for c in &pop {
                if c.fitness != task.fitness(&c.x).unwrap() || !search_box.contains(&c.x) {
                    violations += 1;
                }
            }
        }
    }
    violations
}

/// Save/load of a tapered net reproduces every parameter and output bit for bit.
pub fn model_round_trip_is_identity(input_dim: usize, depth: usize, output_dim: usize, seed: u64) -> bool {
    let net = Mlp::new(input_dim, depth, output_dim, Activation::Relu, seed).unwrap();
    let back = io::from_json(&io::to_json(&net).unwrap()).unwrap();
    if back != net {
        return false;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..20).all(|_| {
        let x: Vec<f64> = (0..input_dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        net.forward(&x).unwrap() == back.forward(&x).unwrap()
    })
}

/// JSON report parses back to an equal value and re-serializes to the same text;
/// CSV rows parse back to the exact stored floats.
pub fn report_round_trip_is_identity(seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curves = Strategy::ALL
        .iter()
        .map(|&strategy| StrategyCurve {
            strategy,
            constant: strategy == Strategy::NetD,
            evaluations_per_step: 20,
            points: (0..5)
                .map(|i| CurvePoint {
                    iteration: i,
                    evaluations: (i + 1) * 20,
                    mean: rng.gen::<f64>() * 10f64.powi(rng.gen_range(-12..3)),
                    stderr: rng.gen::<f64>() * 1e-3,
                })
                .collect(),
        })
        .collect();
    let report = ExperimentReport {
        metric: MetricKind::LinResidual,
        num_tasks: 3,
        curves,
        raw: vec![],
        operators: vec![],
        table: vec![],
        metadata: Metadata {
            config: ExperimentConfig::new(Family::Linear),
            crate_version: "test".into(),
            wall_clock_seconds: rng.gen(),
        },
    };
    let text = report.to_json().unwrap();
    let back = ExperimentReport::from_json(&text).unwrap();
    if back != report || back.to_json().unwrap() != text {
        return false;
    }
    let mut buf = Vec::new();
    write_curves_csv(&report, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let flat: Vec<(f64, f64)> = report
        .curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| (p.mean, p.stderr)))
        .collect();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    rows.len() == flat.len()
        && rows.iter().zip(&flat).all(|(r, &(m, s))| {
            r[3].parse::<f64>().unwrap() == m && r[4].parse::<f64>().unwrap() == s
        })
}

/// Stdout of one `lxo` invocation; panics on a non-zero exit.
pub fn run_cli(bin: &Path, args: &[&str]) -> String {
    let out = Command::new(bin).args(args).output().expect("spawn lxo");
    assert!(
        out.status.success(),
        "lxo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Two separate processes given the same seed print identical traces.
pub fn cli_search_is_deterministic(bin: &Path) -> bool {
    ["quadratic", "linear", "logreg"].iter().all(|family| {
        let args = [
            "search",
            "--family",
            family,
            "--strategy",
            "classic_ga",
            "--seed",
            "11",
            "--generations",
            "30",
        ];
        let a = run_cli(bin, &args);
        let b = run_cli(bin, &args);
        a == b && a.lines().count() == 32
    })
}
