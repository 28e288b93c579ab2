use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use learned_crossover::harness::report::{emit_report, emit_table, ReportFormat};
use learned_crossover::harness::runner::{self, required_operator, strategy_rng, task_for_index};
use learned_crossover::harness::ExperimentConfig;
use learned_crossover::nn::{OptimizerKind, TrainConfig};
use learned_crossover::search::{GaConfig, Strategy};
use learned_crossover::tasks::{Family, FamilySpec, DEFAULT_N_TRAIN};
use learned_crossover::training::{self, OperatorKind, TrainedOperator, DEFAULT_PARENT_RADIUS};
use learned_crossover::{Error, Result};

#[derive(Parser)]
#[command(name = "lxo", version, about = "Learned crossover operators for genetic algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one operator network and write it with its manifest.
    Train {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        operator: OperatorKind,
        #[arg(long, default_value_t = 5)]
        hidden_depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_N_TRAIN)]
        n_train: usize,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long, value_parser = parse_optimizer)]
        optimizer: Option<OptimizerKind>,
        #[arg(long, default_value_t = DEFAULT_PARENT_RADIUS)]
        parent_radius: f64,
    },
    /// Run every configured strategy over many tasks and write convergence curves.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep Net_D hidden depths on the logistic-regression family.
    Table1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one strategy on one seeded task and print its trace.
    Search {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_N_TRAIN)]
        n_train: usize,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        mutation_sigma: Option<f64>,
        /// Operator model file for the net_* strategies.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn parse_optimizer(s: &str) -> std::result::Result<OptimizerKind, String> {
    match s {
        "plain-sgd" => Ok(OptimizerKind::PlainSgd),
        "adaptive-moments" => Ok(OptimizerKind::AdaptiveMoments),
        other => Err(format!("unknown optimizer {other:?} (plain-sgd | adaptive-moments)")),
    }
}

fn log(msg: &str) {
    eprintln!("[lxo] {msg}");
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            family,
            operator,
            hidden_depth,
            seed,
            out,
            dimension,
            n_train,
            steps,
            batch_size,
            learning_rate,
            optimizer,
            parent_radius,
        } => {
            let spec = FamilySpec::new(family, dimension.unwrap_or(family.default_dimension()), n_train)?;
            let defaults = TrainConfig::default();
            let cfg = TrainConfig {
                steps: steps.unwrap_or(defaults.steps),
                batch_size: batch_size.unwrap_or(defaults.batch_size),
                learning_rate: learning_rate.unwrap_or(defaults.learning_rate),
                optimizer: optimizer.unwrap_or(defaults.optimizer),
                seed,
            };
            let report_every = (cfg.steps / 20).max(1);
            let mut running = 0.0;
            let op = training::train_operator_with_progress(
                spec,
                operator,
                hidden_depth,
                &cfg,
                parent_radius,
                &mut |step, loss| {
                    running += loss;
                    if (step + 1) % report_every == 0 {
                        log(&format!(
                            "step {}/{}: mean batch loss {:.6}",
                            step + 1,
                            cfg.steps,
                            running / report_every as f64
                        ));
                        running = 0.0;
                    }
                },
            )?;
            log(&format!(
                "held-out loss {:.6} -> {:.6}",
                op.initial_heldout_loss, op.final_heldout_loss
            ));
            op.save(&out)?;
            log(&format!("wrote {}", out.display()));
        }
        Command::Bench { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let out = out
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| Error::Config("no output path (use --out or \"output\")".into()))?;
            let report = runner::run_experiment_logged(&cfg, &mut |m| log(m))?;
            for curve in &report.curves {
                let last = curve.last();
                log(&format!(
                    "{:<10} final mean {:.6e} ± {:.2e}",
                    curve.strategy.as_str(),
                    last.mean,
                    last.stderr
                ));
            }
            emit_report(&report, ReportFormat::from_path(&out), &out)?;
            log(&format!("wrote {}", out.display()));
        }
        Command::Table1 { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let out = out
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| Error::Config("no output path (use --out or \"output\")".into()))?;
            let rows = runner::table1_sweep(&cfg.table_depths, &cfg, &mut |m| log(m))?;
            for r in &rows {
                log(&format!(
                    "H={:<3} net_d {:.4} oracle {:.4} (train: {:.4} / {:.4})",
                    r.hidden_depth, r.netd_heldout, r.oracle_heldout, r.netd_train, r.oracle_train
                ));
            }
            emit_table(&rows, &out)?;
            log(&format!("wrote {}", out.display()));
        }
        Command::Search {
            family,
            strategy,
            seed,
            dimension,
            n_train,
            generations,
            mutation_sigma,
            model,
        } => {
            let spec = FamilySpec::new(family, dimension.unwrap_or(family.default_dimension()), n_train)?;
            let mut cfg = ExperimentConfig::new(family);
            cfg.dimension = Some(spec.dimension);
            cfg.n_train = n_train;
            cfg.eval.generations = generations;
            let ga = GaConfig {
                mutation_sigma: mutation_sigma.unwrap_or(cfg.ga.mutation_sigma),
                ..cfg.ga_config()
            };
            ga.validate()?;
            let mut operators = BTreeMap::new();
            if let Some(kind) = required_operator(strategy) {
                let path = model.ok_or_else(|| {
                    Error::IncompatibleOperator(format!("strategy {strategy} needs --model (a {kind} file)"))
                })?;
                let op = TrainedOperator::load(&path)?;
                if op.kind != kind || op.spec != spec {
                    return Err(Error::IncompatibleOperator(format!(
                        "{} is a {} model for {} (N={})",
                        path.display(),
                        op.kind,
                        op.spec.family,
                        op.spec.dimension
                    )));
                }
                operators.insert(kind, op);
            }
            let task = task_for_index(&spec, seed, 0)?;
            let trace = runner::run_strategy(strategy, &task, &ga, &operators, &mut strategy_rng(seed, 0, strategy))?;
            println!("generation,evaluations,best_fitness,best_error");
            for (i, (f, e)) in trace.best_fitness.iter().zip(&trace.best_error).enumerate() {
                let evals = if trace.constant { 1 } else { (i + 1) * trace.evaluations_per_step };
                println!("{i},{evals},{f:.16e},{e:.16e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
