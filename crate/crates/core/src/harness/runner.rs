use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::metric::MetricKind;
use crate::harness::report::{
    mean_and_stderr, CurvePoint, ExperimentReport, Metadata, OperatorSummary, RawTrace,
    RecognitionRow, StrategyCurve, RAW_TRACE_LIMIT,
};
use crate::search::{self, GaConfig, SearchRng, SearchTrace, Strategy};
use crate::seeds::derive_seed;
use crate::tasks::{FamilySpec, Task};
use crate::training::{self, OperatorKind, TrainedOperator};

const ROLE_TASK: u64 = 0x7461_736b;
const ROLE_STRATEGY: u64 = 0x7374_7261;

/// Task `index` of an experiment; identical for every strategy.
pub fn task_for_index(spec: &FamilySpec, master_seed: u64, index: usize) -> Result<Task> {
    let mut rng = SearchRng::seed_from_u64(derive_seed(master_seed, &[ROLE_TASK, index as u64]));
    spec.sample(&mut rng)
}

/// Random stream for one (task, strategy) run.
pub fn strategy_rng(master_seed: u64, index: usize, strategy: Strategy) -> SearchRng {
    SearchRng::seed_from_u64(derive_seed(
        master_seed,
        &[ROLE_STRATEGY, index as u64, strategy.id()],
    ))
}

pub fn required_operator(strategy: Strategy) -> Option<OperatorKind> {
    match strategy {
        Strategy::Blind | Strategy::ClassicGa => None,
        Strategy::NetD => Some(OperatorKind::NetD),
        Strategy::NetGa => Some(OperatorKind::NetGa),
        Strategy::Net1p => Some(OperatorKind::Net1p),
    }
}

/// Runs one strategy on one task.
pub fn run_strategy(
    strategy: Strategy,
    task: &Task,
    ga: &GaConfig,
    operators: &BTreeMap<OperatorKind, TrainedOperator>,
    rng: &mut SearchRng,
) -> Result<SearchTrace> {
    let op = |kind: OperatorKind| {
        operators
            .get(&kind)
            .map(|o| &o.net)
            .ok_or_else(|| Error::IncompatibleOperator(format!("no {kind} operator available")))
    };
    match strategy {
        Strategy::Blind => search::blind_search(task, ga.generations, ga.children, rng),
        Strategy::ClassicGa => search::classic_ga(task, ga, rng),
        Strategy::NetD => search::netd_solve(op(OperatorKind::NetD)?, task, ga.generations + 1),
        Strategy::NetGa => search::net_ga(op(OperatorKind::NetGa)?, task, ga, rng),
        Strategy::Net1p => search::net_1p(op(OperatorKind::Net1p)?, task, ga, rng),
    }
}

/// Loads configured operator files or trains the missing ones.
pub fn prepare_operators(
    cfg: &ExperimentConfig,
    log: &mut dyn FnMut(&str),
) -> Result<BTreeMap<OperatorKind, TrainedOperator>> {
    let spec = cfg.family_spec()?;
    let mut out = BTreeMap::new();
    for strategy in cfg.strategy_list() {
        let Some(kind) = required_operator(strategy) else {
            continue;
        };
        let op = match cfg.operators.get(&kind) {
            Some(path) => {
                let op = TrainedOperator::load(path)?;
                if op.kind != kind || op.spec != spec {
                    return Err(Error::IncompatibleOperator(format!(
                        "{} holds {} for {} (N={}), experiment needs {kind} for {} (N={})",
                        path.display(),
                        op.kind,
                        op.spec.family,
                        op.spec.dimension,
                        spec.family,
                        spec.dimension
                    )));
                }
                log(&format!("loaded {kind} from {}", path.display()));
                op
            }
            None => {
                log(&format!(
                    "training {kind} for {} (H={}, {} steps)",
                    spec.family, cfg.hidden_depth, cfg.train.steps
                ));
                let op = training::train_operator(spec, kind, cfg.hidden_depth, &cfg.train, cfg.parent_radius)?;
                log(&format!(
                    "{kind}: held-out loss {:.6} -> {:.6}",
                    op.initial_heldout_loss, op.final_heldout_loss
                ));
                op
            }
        };
        out.insert(kind, op);
    }
    Ok(out)
}

/// Runs every strategy on `num_tasks` seeded tasks with already prepared operators.
pub fn run_with_operators(
    cfg: &ExperimentConfig,
    operators: &BTreeMap<OperatorKind, TrainedOperator>,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let started = Instant::now();
    let spec = cfg.family_spec()?;
    let ga = cfg.ga_config();
    let strategies = cfg.strategy_list();
    let num_tasks = cfg.eval.num_tasks;

    let per_task: Vec<Vec<SearchTrace>> = (0..num_tasks)
        .into_par_iter()
        .map(|index| {
            let task = task_for_index(&spec, cfg.seed, index)?;
            strategies
                .iter()
                .map(|&s| run_strategy(s, &task, &ga, operators, &mut strategy_rng(cfg.seed, index, s)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let curves = strategies
        .iter()
        .enumerate()
        .map(|(k, &strategy)| aggregate(strategy, per_task.iter().map(|traces| &traces[k])))
        .collect();

    let raw = if num_tasks <= RAW_TRACE_LIMIT {
        per_task
            .iter()
            .enumerate()
            .flat_map(|(task_index, traces)| {
                traces.iter().map(move |t| RawTrace {
                    task_index,
                    strategy: t.strategy,
                    best_error: t.best_error.clone(),
                })
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(ExperimentReport {
        metric: MetricKind::for_family(spec.family),
        num_tasks,
        curves,
        raw,
        operators: operators
            .values()
            .map(|op| OperatorSummary {
                operator: op.kind,
                hidden_depth: op.net.hidden_depth(),
                initial_heldout_loss: op.initial_heldout_loss,
                final_heldout_loss: op.final_heldout_loss,
            })
            .collect(),
        table: Vec::new(),
        metadata: Metadata {
            config: cfg.clone(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

fn aggregate<'a>(strategy: Strategy, traces: impl Iterator<Item = &'a SearchTrace>) -> StrategyCurve {
    let traces: Vec<&SearchTrace> = traces.collect();
    let first = traces[0];
    let len = first.best_error.len();
    let points = (0..len)
        .map(|i| {
            let column: Vec<f64> = traces.iter().map(|t| t.best_error[i]).collect();
            let (mean, stderr) = mean_and_stderr(&column);
            CurvePoint {
                iteration: i,
                evaluations: if first.constant { 1 } else { (i + 1) * first.evaluations_per_step },
                mean,
                stderr,
            }
        })
        .collect();
    StrategyCurve {
        strategy,
        constant: first.constant,
        evaluations_per_step: first.evaluations_per_step,
        points,
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_logged(cfg, &mut |_| {})
}

pub fn run_experiment_logged(cfg: &ExperimentConfig, log: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    cfg.validate()?;
    let started = Instant::now();
    let operators = prepare_operators(cfg, log)?;
    let mut report = run_with_operators(cfg, &operators)?;
    report.metadata.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Mean recognition of `net` and of the oracle fit over the experiment's tasks.
pub fn recognition_row(
    cfg: &ExperimentConfig,
    op: &TrainedOperator,
) -> Result<RecognitionRow> {
    let spec = cfg.family_spec()?;
    if op.kind != OperatorKind::NetD || op.spec != spec {
        return Err(Error::IncompatibleOperator("recognition table needs a net-d operator for the configured family".into()));
    }
    let rows: Vec<[f64; 4]> = (0..cfg.eval.num_tasks)
        .into_par_iter()
        .map(|index| {
            let task = task_for_index(&spec, cfg.seed, index)?;
            let Task::Logreg(t) = &task else {
                return Err(Error::Config("recognition table requires the logreg family".into()));
            };
            let w_net = spec.search_box().clip(&op.net.forward(&task.encode_theta())?);
            let w_oracle = t.oracle()?;
            Ok([
                t.recognition(&w_net)?,
                t.recognition(&w_oracle)?,
                t.training_recognition(&w_net)?,
                t.training_recognition(&w_oracle)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64;
    Ok(RecognitionRow {
        hidden_depth: op.net.hidden_depth(),
        netd_heldout: mean(0),
        oracle_heldout: mean(1),
        netd_train: mean(2),
        oracle_train: mean(3),
    })
}

/// Trains `Net_D` for each hidden depth and tabulates recognition against the oracle.
pub fn table1_sweep(
    depths: &[usize],
    cfg: &ExperimentConfig,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<RecognitionRow>> {
    cfg.validate()?;
    let spec = cfg.family_spec()?;
    if spec.family != crate::tasks::Family::Logreg {
        return Err(Error::Config("table1 requires family \"logreg\"".into()));
    }
    depths
        .iter()
        .map(|&h| {
            log(&format!("training net-d with H={h} ({} steps)", cfg.train.steps));
            let op = training::train_net_d(spec, h, &cfg.train)?;
            log(&format!(
                "H={h}: held-out loss {:.6} -> {:.6}",
                op.initial_heldout_loss, op.final_heldout_loss
            ));
            recognition_row(cfg, &op)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::TrainConfig;
    use crate::tasks::Family;

    fn tiny(family: Family) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(family);
        cfg.hidden_depth = 1;
        cfg.train = TrainConfig {
            steps: 5,
            batch_size: 8,
            ..TrainConfig::default()
        };
        cfg.eval.num_tasks = 4;
        cfg.eval.generations = Some(3);
        cfg.seed = 9;
        cfg
    }

    #[test]
    fn single_point_curve() {
        let mut cfg = tiny(Family::Quadratic);
        cfg.strategies = vec![Strategy::ClassicGa];
        cfg.eval.num_tasks = 1;
        cfg.eval.generations = Some(0);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.curves.len(), 1);
        assert_eq!(report.curves[0].points.len(), 1);
        assert_eq!(report.curves[0].points[0].stderr, 0.0);
    }

    #[test]
    fn budget_alignment_and_constant_flag() {
        let report = run_experiment(&tiny(Family::Linear)).unwrap();
        for c in &report.curves {
            assert_eq!(c.points.len(), 4);
            if c.strategy == Strategy::NetD {
                assert!(c.constant);
            } else {
                for p in &c.points {
                    assert_eq!(p.evaluations, (p.iteration + 1) * 20);
                }
            }
        }
    }

    #[test]
    fn aggregates_match_raw_traces() {
        let report = run_experiment(&tiny(Family::Quadratic)).unwrap();
        assert_eq!(report.raw.len(), 4 * 5);
        for curve in &report.curves {
            for p in &curve.points {
                let column: Vec<f64> = report
                    .raw
                    .iter()
                    .filter(|r| r.strategy == curve.strategy)
                    .map(|r| r.best_error[p.iteration])
                    .collect();
                let (m, s) = mean_and_stderr(&column);
                assert!((m - p.mean).abs() <= 1e-12 * m.abs().max(1.0));
                assert!((s - p.stderr).abs() <= 1e-12 * s.abs().max(1.0));
            }
        }
    }

    #[test]
    fn strategy_order_does_not_change_results() {
        let mut a = tiny(Family::Quadratic);
        a.strategies = vec![Strategy::Blind, Strategy::ClassicGa, Strategy::NetGa];
        let mut b = a.clone();
        b.strategies = vec![Strategy::NetGa, Strategy::Blind, Strategy::ClassicGa];
        let ra = run_experiment(&a).unwrap();
        let rb = run_experiment(&b).unwrap();
        for s in &a.strategies {
            assert_eq!(ra.curve(*s), rb.curve(*s));
        }
    }

    #[test]
    fn logreg_table_rows() {
        let mut cfg = tiny(Family::Logreg);
        cfg.eval.num_tasks = 5;
        let rows = table1_sweep(&[1, 2], &cfg, &mut |_| {}).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].oracle_heldout, rows[1].oracle_heldout);
        for r in rows {
            assert!((0.0..=1.0).contains(&r.netd_heldout));
        }
        assert!(table1_sweep(&[1], &tiny(Family::Linear), &mut |_| {}).is_err());
    }
}
