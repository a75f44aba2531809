//! Family generators and end-to-end experiments that tabulate the achieved
//! ratios against the rates `n^{(3-δ)/2}` (volume) and `n^{2-δ/2}` (diameter),
//! plus the random-strips family whose subfamilies all have large volume.

mod family;
mod report;

pub use family::{
    derive_seed, generate_family, random_unit, strip, Family, FamilyKind, FamilySpec,
    STRIP_DOUBLINGS, STRIP_PROBES,
};
pub use report::{emit_report, render_report, BoundReport, BoundRow, ReportFormat, CSV_COLUMNS};

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::{diameter, volume_exact, volume_monte_carlo, HPolytope, DEFAULT_MAX_DIM};
use crate::error::{Error, Result};
use crate::helly::{
    select_diameter_subfamily, select_volume_subfamily, OracleMode, Pipeline, SelectionOptions,
    SelectionResult,
};

pub const DEFAULT_REPORT_CONSTANT: f64 = 3.0;
pub const DEFAULT_SUBFAMILIES: usize = 50;
/// Lower-bound volumes are exact up to this dimension, Monte Carlo above.
pub const LOWERBOUND_EXACT_MAX_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Volume,
    Diameter,
    Lowerbound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub n: usize,
    pub delta: f64,
}

/// Everything an experiment depends on. Reports are a pure function of this.
///
/// For `lowerbound`, `trials` is the number of sampled subfamilies per
/// dimension and `family.count` the number of strips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub family: FamilySpec,
    pub grid: Vec<GridCell>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_report_constant")]
    pub report_constant: f64,
    #[serde(default)]
    pub selection: SelectionOptions,
    /// Record wall-clock runtimes. Off by default so reports are reproducible.
    #[serde(default)]
    pub timing: bool,
}

fn one() -> usize {
    1
}

fn default_report_constant() -> f64 {
    DEFAULT_REPORT_CONSTANT
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, kind: FamilyKind) -> Self {
        Self {
            experiment,
            family: FamilySpec::new(kind, 0, 0, 0),
            grid: Vec::new(),
            trials: 1,
            seed: 0,
            report_constant: DEFAULT_REPORT_CONSTANT,
            selection: SelectionOptions::default(),
            timing: false,
        }
    }

    pub fn with_grid(mut self, ns: &[usize], deltas: &[f64]) -> Self {
        self.grid = ns
            .iter()
            .flat_map(|&n| deltas.iter().map(move |&delta| GridCell { n, delta }))
            .collect();
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.family.count = count;
        self
    }

    /// The family spec for one trial.
    pub fn family_for(&self, n: usize, seed: u64) -> FamilySpec {
        let kind = match self.family.kind {
            FamilyKind::AffineImage => self.family.base.unwrap_or(FamilyKind::RandomPolytope),
            k => k,
        };
        let count = if self.family.count > 0 {
            self.family.count
        } else {
            match kind {
                FamilyKind::RandomPolytope => 4 * n,
                FamilyKind::RandomStrips => 16 * n,
                _ => 0,
            }
        };
        FamilySpec {
            n,
            count,
            seed,
            ..self.family.clone()
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BoundReport> {
    match cfg.experiment {
        Experiment::Volume => run_volume_experiment(cfg),
        Experiment::Diameter => run_diameter_experiment(cfg),
        Experiment::Lowerbound => {
            let rows = cfg
                .grid
                .iter()
                .map(|c| lowerbound_row(cfg, c.n, c.delta))
                .collect::<Result<Vec<_>>>()?;
            Ok(BoundReport::new(cfg.clone(), rows))
        }
    }
}

fn jobs(cfg: &ExperimentConfig) -> Vec<(GridCell, usize)> {
    cfg.grid
        .iter()
        .flat_map(|&c| (0..cfg.trials).map(move |t| (c, t)))
        .collect()
}

fn check_grid(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    if let Some(c) = cfg
        .grid
        .iter()
        .find(|c| c.n == 0 || !(1.0..=2.0).contains(&c.delta))
    {
        return Err(Error::InvalidArgument(format!(
            "invalid grid cell n = {}, delta = {}",
            c.n, c.delta
        )));
    }
    Ok(())
}

/// Volume pipeline on `trials` seeded families per grid cell. A failing trial
/// becomes a row with an error, not a fatal error.
pub fn run_volume_experiment(cfg: &ExperimentConfig) -> Result<BoundReport> {
    check_grid(cfg)?;
    let rows = jobs(cfg)
        .par_iter()
        .map(|&(c, t)| pipeline_row(cfg, Pipeline::Volume, c, t))
        .collect();
    Ok(BoundReport::new(cfg.clone(), rows))
}

/// Diameter pipeline on the bodies of `trials` seeded families per grid cell.
pub fn run_diameter_experiment(cfg: &ExperimentConfig) -> Result<BoundReport> {
    check_grid(cfg)?;
    let rows = jobs(cfg)
        .par_iter()
        .map(|&(c, t)| pipeline_row(cfg, Pipeline::Diameter, c, t))
        .collect();
    Ok(BoundReport::new(cfg.clone(), rows))
}

fn pipeline_row(
    cfg: &ExperimentConfig,
    pipeline: Pipeline,
    cell: GridCell,
    trial: usize,
) -> BoundRow {
    let GridCell { n, delta } = cell;
    let seed = derive_seed(cfg.seed, n, trial);
    let mut row = BoundRow::new(n, delta, pipeline.name(), trial, seed);
    row.bound_exponent = pipeline.bound_exponent(delta);
    row.bound = (n as f64).powf(row.bound_exponent);
    let start = Instant::now();
    let mut opts = cfg.selection;
    opts.seed = seed;
    opts.oracle.seed = seed;
    let outcome = generate_family(&cfg.family_for(n, seed)).and_then(|fam| {
        let r = match pipeline {
            Pipeline::Diameter => select_diameter_subfamily(&fam.bodies, delta, &opts)?,
            _ => select_volume_subfamily(&fam.polytope, delta, &opts)?,
        };
        Ok((fam, r))
    });
    match outcome {
        Ok((fam, r)) => fill_row(&mut row, &fam, &r, cfg.report_constant),
        Err(e) => {
            row.oracle_mode = "error".into();
            row.violations.push(format!("pipeline error: {e}"));
            row.error = Some(e.to_string());
        }
    }
    if cfg.timing {
        row.runtime_ms = start.elapsed().as_millis() as u64;
    }
    row
}

fn fill_row(row: &mut BoundRow, fam: &Family, r: &SelectionResult, constant: f64) {
    let n = r.dim;
    row.s = Some(r.s);
    row.cap = Some(r.admissible_cap);
    row.epsilon = r.epsilon;
    row.achieved = r.achieved;
    row.stderr = r.stderr;
    row.normalized = r.normalized();
    row.oracle_mode = r.oracle_mode.name().into();
    row.sigma_size = Some(r.sigma_size);
    row.tau_size = Some(r.tau_size);
    row.indices = r.indices.clone();
    if r.s > r.admissible_cap {
        row.violations
            .push(format!("s = {} exceeds cap {}", r.s, r.admissible_cap));
    }
    if r.s > r.sigma_size + n + 1 {
        row.violations.push(format!(
            "s = {} exceeds |σ| + n + 1 = {}",
            r.s,
            r.sigma_size + n + 1
        ));
    }
    if let Some(a) = r.normalized() {
        if a > constant {
            row.violations
                .push(format!("normalized ratio {a} exceeds {constant}"));
        }
    }
    match r.pipeline {
        Pipeline::Diameter => {
            if r.certified != Some(true) {
                row.violations
                    .push("containment factor not certified".into());
            }
            if n <= DEFAULT_MAX_DIM {
                let q = HPolytope::new(
                    n,
                    r.indices
                        .iter()
                        .flat_map(|&i| fam.bodies[i].halfspaces().iter().cloned())
                        .collect(),
                );
                match q.and_then(|q| Ok(diameter(&q)? / diameter(&fam.polytope)?)) {
                    Ok(ratio) => {
                        row.diameter_ratio = Some(ratio);
                        if ratio < 1.0 - 1e-9 {
                            row.violations
                                .push(format!("diameter ratio {ratio} below 1"));
                        }
                    }
                    Err(e) => row.violations.push(format!("diameter ratio: {e}")),
                }
            }
        }
        _ => {
            if let Some(a) = r.achieved {
                let slack = match r.oracle_mode {
                    OracleMode::MonteCarlo => 4.0 * r.stderr.unwrap_or(0.0),
                    _ => 1e-9,
                };
                if a < 1.0 - slack {
                    row.violations.push(format!("volume ratio {a} below 1"));
                }
            }
        }
    }
}

/// For each `n`: `count` random strips normalised to unit volume, then the
/// minimum over `trials` random subfamilies of size `⌈n^δ⌉` of
/// `vol^{1/n} · log(1+n)/√n`.
pub fn run_lowerbound_experiment(
    n_list: &[usize],
    delta: f64,
    count: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    let cfg = ExperimentConfig::new(Experiment::Lowerbound, FamilyKind::RandomStrips)
        .with_grid(n_list, &[delta])
        .with_trials(trials)
        .with_seed(seed)
        .with_count(count);
    run_experiment(&cfg)
}

fn lowerbound_volume(p: &HPolytope, samples: usize, seed: u64) -> Result<(f64, OracleMode)> {
    if p.dim() <= LOWERBOUND_EXACT_MAX_DIM {
        Ok((volume_exact(p)?, OracleMode::Exact))
    } else {
        Ok((
            volume_monte_carlo(p, samples, seed)?.value,
            OracleMode::MonteCarlo,
        ))
    }
}

fn lowerbound_row(cfg: &ExperimentConfig, n: usize, delta: f64) -> Result<BoundRow> {
    if cfg.trials == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "lower-bound experiment needs n ≥ 1 and at least one subfamily".into(),
        ));
    }
    let seed = derive_seed(cfg.seed, n, 0);
    let start = Instant::now();
    let fam = generate_family(&FamilySpec {
        kind: FamilyKind::RandomStrips,
        ..cfg.family_for(n, seed)
    })?;
    let count = fam.bodies.len();
    let size = ((n as f64).powf(delta).ceil() as usize).min(count);
    let samples = cfg.selection.oracle.mc_samples;
    let (total, mode) = lowerbound_volume(&fam.polytope, samples, seed)?;
    let nf = n as f64;
    let scale = (1.0 + nf).ln() / nf.sqrt();
    let volumes = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let sub_seed = derive_seed(seed, n, t + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
            let mut pick = rand::seq::index::sample(&mut rng, count, size).into_vec();
            pick.sort_unstable();
            let q = HPolytope::new(
                n,
                pick.iter()
                    .flat_map(|&i| fam.bodies[i].halfspaces().iter().cloned())
                    .collect(),
            )?;
            match lowerbound_volume(&q, samples, sub_seed) {
                Ok((v, _)) => Ok((v / total).powf(1.0 / nf)),
                Err(Error::Unbounded) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let min_root = volumes.into_iter().fold(f64::INFINITY, f64::min);
    let mut row = BoundRow::new(n, delta, "lowerbound", 0, seed);
    row.s = Some(size);
    row.cap = Some(size);
    row.achieved = Some(min_root);
    row.normalized = Some(min_root * scale);
    row.bound_exponent = 0.5;
    row.bound = nf.sqrt() / (1.0 + nf).ln();
    row.oracle_mode = mode.name().into();
    if !(min_root * scale > 0.0 && (min_root * scale).is_finite()) {
        row.violations.push(format!(
            "lower statistic {} is not a positive number",
            min_root * scale
        ));
    }
    if cfg.timing {
        row.runtime_ms = start.elapsed().as_millis() as u64;
    }
    Ok(row)
}
