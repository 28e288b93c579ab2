use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::metric::MetricKind;
use crate::search::Strategy;
use crate::training::OperatorKind;

/// Raw per-task series are kept in reports up to this many tasks.
pub const RAW_TRACE_LIMIT: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    /// Cumulative fitness evaluations behind this point.
    pub evaluations: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyCurve {
    pub strategy: Strategy,
    pub constant: bool,
    pub evaluations_per_step: usize,
    pub points: Vec<CurvePoint>,
}

impl StrategyCurve {
    pub fn mean_at(&self, iteration: usize) -> f64 {
        self.points[iteration].mean
    }

    pub fn stderr_at(&self, iteration: usize) -> f64 {
        self.points[iteration].stderr
    }

    pub fn last(&self) -> &CurvePoint {
        self.points.last().expect("curves are never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrace {
    pub task_index: usize,
    pub strategy: Strategy,
    pub best_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSummary {
    pub operator: OperatorKind,
    pub hidden_depth: usize,
    pub initial_heldout_loss: f64,
    pub final_heldout_loss: f64,
}

/// Mean recognition over the evaluation tasks for one hidden depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionRow {
    pub hidden_depth: usize,
    pub netd_heldout: f64,
    pub oracle_heldout: f64,
    pub netd_train: f64,
    pub oracle_train: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: ExperimentConfig,
    pub crate_version: String,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metric: MetricKind,
    pub num_tasks: usize,
    pub curves: Vec<StrategyCurve>,
    #[serde(default)]
    pub raw: Vec<RawTrace>,
    #[serde(default)]
    pub operators: Vec<OperatorSummary>,
    #[serde(default)]
    pub table: Vec<RecognitionRow>,
    pub metadata: Metadata,
}

impl ExperimentReport {
    pub fn curve(&self, strategy: Strategy) -> Option<&StrategyCurve> {
        self.curves.iter().find(|c| c.strategy == strategy)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sample mean and standard error (`std / √n`, with `n − 1` in the variance).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// Picks the format from the file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_curves_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "iteration", "metric", "mean", "stderr"])?;
    for curve in &report.curves {
        for p in &curve.points {
            w.write_record([
                curve.strategy.as_str().to_string(),
                p.iteration.to_string(),
                report.metric.as_str().to_string(),
                fmt_f64(p.mean),
                fmt_f64(p.stderr),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_table_csv<W: Write>(rows: &[RecognitionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hidden_depth", "netd_heldout", "oracle_heldout", "netd_train", "oracle_train"])?;
    for r in rows {
        w.write_record([
            r.hidden_depth.to_string(),
            fmt_f64(r.netd_heldout),
            fmt_f64(r.oracle_heldout),
            fmt_f64(r.netd_train),
            fmt_f64(r.oracle_train),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    match format {
        ReportFormat::Csv => write_curves_csv(report, &mut out)?,
        ReportFormat::Json => {
            out.write_all(report.to_json()?.as_bytes())
                .map_err(|source| Error::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
        }
    }
    out.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_table(rows: &[RecognitionRow], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    write_table_csv(rows, &mut out)?;
    out.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::Family;

    fn sample_report() -> ExperimentReport {
        let curve = |strategy, offset: f64| StrategyCurve {
            strategy,
            constant: false,
            evaluations_per_step: 20,
            points: (0..3)
                .map(|i| CurvePoint {
                    iteration: i,
                    evaluations: (i + 1) * 20,
                    mean: offset / (i + 1) as f64,
                    stderr: 0.1 / 3.0,
                })
                .collect(),
        };
        ExperimentReport {
            metric: MetricKind::QuadFgap,
            num_tasks: 2,
            curves: vec![curve(Strategy::Blind, 1.0), curve(Strategy::ClassicGa, 0.3)],
            raw: vec![],
            operators: vec![],
            table: vec![],
            metadata: Metadata {
                config: ExperimentConfig::new(Family::Quadratic),
                crate_version: "0.1.0".into(),
                wall_clock_seconds: 1.5,
            },
        }
    }

    #[test]
    fn stderr_formula() {
        let (m, s) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let expected = (5.0f64 / 3.0).sqrt() / 2.0;
        assert!((s - expected).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn csv_rows_and_strict_parse() {
        let report = sample_report();
        let mut buf = Vec::new();
        write_curves_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "strategy,iteration,metric,mean,stderr");
        let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(text.as_bytes());
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 6);
        let mean: f64 = rows[4][3].parse().unwrap();
        assert_eq!(mean, 0.3 / 2.0);
        assert_eq!(&rows[0][2], "quad_fgap");
    }

    #[test]
    fn json_round_trip_is_identity() {
        let report = sample_report();
        let text = report.to_json().unwrap();
        let back = ExperimentReport::from_json(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(ReportFormat::from_path(Path::new("r.csv")), ReportFormat::Csv);
        assert_eq!(ReportFormat::from_path(Path::new("r.json")), ReportFormat::Json);
    }

    #[test]
    fn seventeen_digit_floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-7, 6.02214076e23] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn unwritable_path_errors() {
        let report = sample_report();
        let err = emit_report(&report, ReportFormat::Json, Path::new("/nonexistent-dir/x/r.json"));
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
