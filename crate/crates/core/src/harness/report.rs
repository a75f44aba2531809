use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 12] = [
    "n",
    "delta",
    "pipeline",
    "s",
    "cap",
    "epsilon",
    "achieved",
    "normalized",
    "bound_exponent",
    "oracle_mode",
    "seed",
    "runtime_ms",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub delta: f64,
    /// `volume`, `diameter`, `contact` or `lowerbound`.
    pub pipeline: String,
    pub trial: usize,
    pub seed: u64,
    pub s: Option<usize>,
    pub cap: Option<usize>,
    pub epsilon: Option<f64>,
    pub achieved: Option<f64>,
    pub stderr: Option<f64>,
    /// `achieved / n^{bound_exponent}`; for the lower-bound rows the
    /// statistic `min vol^{1/n} · log(1+n)/√n`.
    pub normalized: Option<f64>,
    pub bound_exponent: f64,
    pub bound: f64,
    pub oracle_mode: String,
    pub runtime_ms: u64,
    pub sigma_size: Option<usize>,
    pub tau_size: Option<usize>,
    /// `diam(Q)/diam(P)`, diameter rows only.
    pub diameter_ratio: Option<f64>,
    pub indices: Vec<usize>,
    pub error: Option<String>,
    pub violations: Vec<String>,
}

impl BoundRow {
    pub fn new(n: usize, delta: f64, pipeline: &str, trial: usize, seed: u64) -> Self {
        Self {
            n,
            delta,
            pipeline: pipeline.to_string(),
            trial,
            seed,
            s: None,
            cap: None,
            epsilon: None,
            achieved: None,
            stderr: None,
            normalized: None,
            bound_exponent: 0.0,
            bound: 1.0,
            oracle_mode: "none".into(),
            runtime_ms: 0,
            sigma_size: None,
            tau_size: None,
            diameter_ratio: None,
            indices: Vec::new(),
            error: None,
            violations: Vec::new(),
        }
    }

    fn csv_record(&self) -> [String; 12] {
        let opt_f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let opt_u = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.n.to_string(),
            self.delta.to_string(),
            self.pipeline.clone(),
            opt_u(self.s),
            opt_u(self.cap),
            opt_f(self.epsilon),
            opt_f(self.achieved),
            opt_f(self.normalized),
            self.bound_exponent.to_string(),
            self.oracle_mode.clone(),
            self.seed.to_string(),
            self.runtime_ms.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub config: ExperimentConfig,
    pub rows: Vec<BoundRow>,
    /// Largest `normalized` over the rows.
    pub max_normalized: Option<f64>,
    pub violations: usize,
}

impl BoundReport {
    pub fn new(config: ExperimentConfig, rows: Vec<BoundRow>) -> Self {
        let max_normalized = rows.iter().filter_map(|r| r.normalized).reduce(f64::max);
        let violations = rows.iter().map(|r| r.violations.len()).sum();
        Self {
            config,
            rows,
            max_normalized,
            violations,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

pub fn render_report(report: &BoundReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::IoFailure(e.to_string());
            w.write_record(CSV_COLUMNS).map_err(csv_err)?;
            for row in &report.rows {
                w.write_record(row.csv_record()).map_err(csv_err)?;
            }
            w.into_inner().map_err(|e| Error::IoFailure(e.to_string()))
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit_report(report: &BoundReport, format: ReportFormat, path: &Path) -> Result<()> {
    let bytes = render_report(report, format)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}
