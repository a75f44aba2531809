use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use qhelly::convex::{check_containment, HPolytope};
use qhelly::harness::{
    generate_family, render_report, run_experiment, run_lowerbound_experiment, BoundReport,
    ExperimentConfig, FamilySpec, ReportFormat, DEFAULT_REPORT_CONSTANT, DEFAULT_SUBFAMILIES,
};
use qhelly::helly::{
    select_contact_subfamily, select_diameter_subfamily, select_volume_subfamily, volume_ratio,
    OracleChoice, OracleMode, Pipeline, SelectionOptions, SelectionResult,
};
use qhelly::john::{john_position, validate_decomposition};
use qhelly::sparsify::{audit_sparsification, epsilon_schedule, sparsify, Schedule, Strategy};

#[derive(Parser)]
#[command(
    name = "qhelly",
    version,
    about = "Small subfamilies of half-space and body families with controlled volume or diameter"
)]
struct Cli {
    /// Seed for every randomised step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sparsifier budget is ceil(budget_factor * n / eps^2).
    #[arg(long, global = true)]
    budget_factor: Option<f64>,
    /// Volume oracle: exact, mc or auto.
    #[arg(long, global = true)]
    oracle: Option<OracleChoice>,
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    /// Contact tolerance for the John position.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json, or csv for reports.
    #[arg(long, global = true, default_value = "json")]
    format: ReportFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// John position, contact points and weights of a polytope.
    John { input: PathBuf },
    /// Sparsify the John decomposition of a polytope.
    Sparsify {
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
        /// Overrides the epsilon derived from delta.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value = "volume")]
        schedule: ScheduleArg,
        #[arg(long, default_value = "barrier")]
        strategy: Strategy,
    },
    /// Select half-spaces whose intersection has comparable volume.
    SelectVolume {
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
        /// Keep every contact half-space instead of sparsifying.
        #[arg(long)]
        contact: bool,
        #[arg(long, default_value = "barrier")]
        strategy: Strategy,
        #[arg(long, default_value_t = DEFAULT_REPORT_CONSTANT)]
        report_constant: f64,
    },
    /// Select bodies whose intersection has comparable diameter.
    SelectDiameter {
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_REPORT_CONSTANT)]
        report_constant: f64,
    },
    /// Recheck a saved selection against its family.
    Verify {
        input: PathBuf,
        selection: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REPORT_CONSTANT)]
        report_constant: f64,
    },
    /// Random strips: smallest normalised volume over random subfamilies.
    Lowerbound {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Number of strips; 0 picks 16n.
        #[arg(long, default_value_t = 0)]
        count: usize,
        /// Subfamilies sampled per dimension.
        #[arg(long, default_value_t = DEFAULT_SUBFAMILIES)]
        trials: usize,
    },
    /// Run an experiment described by a JSON config.
    Report { config: PathBuf },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ScheduleArg {
    Volume,
    Diameter,
}

/// What a command produced: output bytes and whether every check held.
struct Outcome {
    bytes: Vec<u8>,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli).and_then(|o| write_out(cli.out.as_deref(), &o.bytes).map(|_| o.passed)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    if cli.format == ReportFormat::Csv
        && !matches!(
            cli.command,
            Command::Lowerbound { .. } | Command::Report { .. }
        )
    {
        bail!("csv output is only available for lowerbound and report");
    }
    let opts = selection_options(cli, SelectionOptions::default());
    match &cli.command {
        Command::John { input } => {
            let p = load_polytope(input)?;
            let jp = john_position(&p, opts.contact_tol)?;
            let validation = validate_decomposition(&jp.decomposition, 1e-6);
            let passed = validation.pass();
            let value = json!({
                "map": jp.map,
                "body": jp.body,
                "decomposition": jp.decomposition,
                "family_indices": jp.family_indices,
                "validation": validation,
            });
            outcome(&value, passed)
        }
        Command::Sparsify {
            input,
            delta,
            epsilon,
            schedule,
            strategy,
        } => {
            let p = load_polytope(input)?;
            let n = p.dim();
            let schedule = match schedule {
                ScheduleArg::Volume => Schedule::Volume,
                ScheduleArg::Diameter => Schedule::Diameter,
            };
            let eps = epsilon.unwrap_or_else(|| epsilon_schedule(n, *delta, schedule));
            let d = john_position(&p, opts.contact_tol)?.decomposition;
            let s = sparsify(&d, eps, opts.budget(n, eps), *strategy, opts.seed)?;
            let audit = audit_sparsification(&s, &d)?;
            outcome(&json!({ "sparse": s, "audit": audit }), audit.pass)
        }
        Command::SelectVolume {
            input,
            delta,
            contact,
            strategy,
            report_constant,
        } => {
            let p = load_polytope(input)?;
            let opts = SelectionOptions {
                strategy: *strategy,
                ..opts
            };
            let r = if *contact {
                select_contact_subfamily(&p, &opts)?
            } else {
                select_volume_subfamily(&p, *delta, &opts)?
            };
            let passed = selection_passes(&r, p.len(), *report_constant);
            outcome(&serde_json::to_value(&r)?, passed)
        }
        Command::SelectDiameter {
            input,
            delta,
            report_constant,
        } => {
            let bodies = load_bodies(input)?;
            let r = select_diameter_subfamily(&bodies, *delta, &opts)?;
            let passed = selection_passes(&r, bodies.len(), *report_constant);
            outcome(&serde_json::to_value(&r)?, passed)
        }
        Command::Verify {
            input,
            selection,
            report_constant,
        } => {
            let r: SelectionResult =
                serde_json::from_slice(&read(selection)?).context("parsing the selection")?;
            let checks = verify(input, &r, &opts, *report_constant)?;
            let passed = checks.iter().all(|c| c["pass"] == true);
            outcome(
                &json!({ "pipeline": r.pipeline, "checks": checks, "passed": passed }),
                passed,
            )
        }
        Command::Lowerbound {
            n,
            delta,
            count,
            trials,
        } => {
            let report = run_lowerbound_experiment(n, *delta, *count, *trials, opts.seed)?;
            report_outcome(&report, cli.format)
        }
        Command::Report { config } => {
            let mut cfg: ExperimentConfig =
                serde_json::from_slice(&read(config)?).context("parsing the config")?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cfg.selection = selection_options(cli, cfg.selection);
            report_outcome(&run_experiment(&cfg)?, cli.format)
        }
    }
}

/// Flags given on the command line override `base`.
fn selection_options(cli: &Cli, base: SelectionOptions) -> SelectionOptions {
    let mut opts = base;
    if let Some(seed) = cli.seed {
        opts.seed = seed;
        opts.oracle.seed = seed;
    }
    if let Some(f) = cli.budget_factor {
        opts.budget_factor = f;
    }
    if let Some(o) = cli.oracle {
        opts.oracle.choice = o;
    }
    if let Some(m) = cli.mc_samples {
        opts.oracle.mc_samples = m;
    }
    if let Some(t) = cli.tol {
        opts.contact_tol = t;
    }
    opts
}

fn selection_passes(r: &SelectionResult, family_len: usize, constant: f64) -> bool {
    r.check(family_len).is_ok()
        && r.normalized().is_none_or(|x| x <= constant)
        && r.certified != Some(false)
}

fn check(name: &str, pass: bool, detail: String) -> Value {
    json!({ "name": name, "pass": pass, "detail": detail })
}

fn verify(
    input: &Path,
    r: &SelectionResult,
    opts: &SelectionOptions,
    constant: f64,
) -> Result<Vec<Value>> {
    let mut checks = Vec::new();
    let normalized = r
        .achieved
        .map(|a| a / (r.dim as f64).powf(r.pipeline.bound_exponent(r.delta)));
    checks.push(check(
        "normalized ratio",
        normalized.is_none_or(|x| x <= constant),
        normalized.map_or("not measured".into(), |x| format!("{x} against {constant}")),
    ));
    match r.pipeline {
        Pipeline::Diameter => {
            let bodies = load_bodies(input)?;
            checks.push(check(
                "structure",
                r.check(bodies.len()).is_ok(),
                format!("{} bodies", bodies.len()),
            ));
            if r.check(bodies.len()).is_err() {
                return Ok(checks);
            }
            let all = intersect(&bodies, &(0..bodies.len()).collect::<Vec<_>>())?;
            let q = intersect(&bodies, &r.indices)?;
            let beta = r.achieved.context("selection has no containment factor")?;
            let cert = check_containment(&q, &all, beta, &r.z)?;
            checks.push(check(
                "containment",
                cert.satisfied,
                format!("max gauge {} at factor {beta}", cert.max_gauge),
            ));
        }
        Pipeline::Volume | Pipeline::Contact => {
            let p = load_polytope(input)?;
            checks.push(check(
                "structure",
                r.check(p.len()).is_ok(),
                format!("{} half-spaces", p.len()),
            ));
            if r.check(p.len()).is_err() {
                return Ok(checks);
            }
            let est = volume_ratio(&p.subfamily(&r.indices)?, &p, &opts.oracle)?;
            let (value, recorded) = match (est.value, r.achieved) {
                (Some(v), Some(a)) => (v, a),
                _ => {
                    checks.push(check("volume ratio", true, "not measured".into()));
                    return Ok(checks);
                }
            };
            let slack = match est.mode {
                OracleMode::MonteCarlo => {
                    4.0 * (est.stderr.unwrap_or(0.0) + r.stderr.unwrap_or(0.0))
                }
                _ => 1e-9 * value,
            };
            checks.push(check(
                "volume ratio",
                (value - recorded).abs() <= slack.max(1e-9 * value) && value >= 1.0 - slack,
                format!("recomputed {value}, recorded {recorded}"),
            ));
        }
    }
    Ok(checks)
}

fn intersect(bodies: &[HPolytope], indices: &[usize]) -> Result<HPolytope> {
    let n = bodies.first().context("empty family")?.dim();
    let hs = indices
        .iter()
        .flat_map(|&i| bodies[i].halfspaces().iter().cloned())
        .collect();
    Ok(HPolytope::new(n, hs)?)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

/// An `HPolytope`, or a `FamilySpec` whose intersection is used.
fn load_polytope(path: &Path) -> Result<HPolytope> {
    let value: Value = serde_json::from_slice(&read(path)?)?;
    if value.get("kind").is_some() {
        let spec: FamilySpec = serde_json::from_value(value)?;
        return Ok(generate_family(&spec)?.polytope);
    }
    serde_json::from_value(value)
        .with_context(|| format!("{} is neither a polytope nor a family spec", path.display()))
}

/// A list of `HPolytope` bodies, or a `FamilySpec` whose bodies are used.
fn load_bodies(path: &Path) -> Result<Vec<HPolytope>> {
    let value: Value = serde_json::from_slice(&read(path)?)?;
    if value.get("kind").is_some() {
        let spec: FamilySpec = serde_json::from_value(value)?;
        return Ok(generate_family(&spec)?.bodies);
    }
    serde_json::from_value(value).with_context(|| {
        format!(
            "{} is neither a body list nor a family spec",
            path.display()
        )
    })
}

fn outcome(value: &Value, passed: bool) -> Result<Outcome> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(Outcome { bytes, passed })
}

fn report_outcome(report: &BoundReport, format: ReportFormat) -> Result<Outcome> {
    for row in report.rows.iter().filter(|r| !r.violations.is_empty()) {
        eprintln!(
            "n = {}, delta = {}, trial {}: {}",
            row.n,
            row.delta,
            row.trial,
            row.violations.join("; ")
        );
    }
    Ok(Outcome {
        bytes: render_report(report, format)?,
        passed: report.passed(),
    })
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}
