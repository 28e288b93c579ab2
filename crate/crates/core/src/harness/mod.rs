//! Batch experiments: operator preparation, seeded multi-task runs,
//! curve aggregation and report output.

pub mod config;
pub mod metric;
pub mod report;
pub mod runner;

pub use config::{EvalConfig, ExperimentConfig};
pub use metric::{metric, MetricEvaluator, MetricKind};
pub use report::{emit_report, emit_table, ExperimentReport, RecognitionRow, ReportFormat};
pub use runner::{run_experiment, run_strategy, run_with_operators, table1_sweep};
