//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::time::{Duration, Instant};

use qhelly::convex::{check_containment, is_bounded, volume_exact, HPolytope, VPolytope};
use qhelly::harness::{
    generate_family, render_report, run_diameter_experiment, run_lowerbound_experiment,
    run_volume_experiment, BoundReport, Experiment, ExperimentConfig, FamilyKind, FamilySpec,
    ReportFormat,
};
use qhelly::helly::{bl_exponents, lifted_operators, OracleChoice};
use qhelly::john::{john_position, JohnDecomposition, CONTACT_TOL};
use qhelly::linalg::{Matrix, Vector};
use qhelly::sparsify::{audit_sparsification, epsilon_schedule, sparsify, Schedule, Strategy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DECOMPOSITION_TOL: f64 = 1e-6;
const BALL_TOL: f64 = 1e-6;
const T_TOL: f64 = 1e-9;
const BL_SUM_TOL: f64 = 1e-6;
const BL_RATIO_TOL: f64 = 1e-9;
const REPORT_CONSTANT: f64 = 3.0;
const EXHAUSTIVE_BUDGET: usize = 8;
/// Smallest lower-bound statistic over n ∈ {2, 3, 4} at the first release
/// (0.8791 observed), rounded down.
const LOWERBOUND_FLOOR: f64 = 0.87;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: Vec<String>, ok_detail: String) -> Outcome {
    if failures.is_empty() {
        Outcome {
            pass: true,
            detail: ok_detail,
        }
    } else {
        let shown: Vec<_> = failures.iter().take(5).cloned().collect();
        Outcome {
            pass: false,
            detail: format!("{} failure(s): {}", failures.len(), shown.join("; ")),
        }
    }
}

/// Independent operator norm of a symmetric matrix (nalgebra's solver).
fn op_norm(m: &Matrix) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
}

fn eig_range(m: &Matrix) -> (f64, f64) {
    let e = m.clone().symmetric_eigen().eigenvalues;
    (e.min(), e.max())
}

fn random_polytope(n: usize, seed: u64) -> HPolytope {
    generate_family(&FamilySpec::new(FamilyKind::RandomPolytope, n, 4 * n, seed))
        .unwrap()
        .polytope
}

/// Cube, simplex and cross-polytope for n ∈ {2..5}, then 20 random polytopes.
fn test_bodies() -> Vec<(String, HPolytope)> {
    let mut out = Vec::new();
    for n in 2..=5 {
        out.push((format!("cube{n}"), HPolytope::cube(n)));
        out.push((format!("simplex{n}"), HPolytope::standard_simplex(n)));
        out.push((format!("cross{n}"), HPolytope::cross_polytope(n)));
    }
    for k in 0..20u64 {
        let n = 2 + (k % 4) as usize;
        out.push((format!("random{n}#{k}"), random_polytope(n, 100 + k)));
    }
    out
}

fn decompositions() -> Vec<(String, JohnDecomposition)> {
    test_bodies()
        .into_iter()
        .map(|(name, p)| {
            (
                name,
                john_position(&p, CONTACT_TOL)
                    .expect("positioning")
                    .decomposition,
            )
        })
        .collect()
}

fn criterion_1(ds: &[(String, JohnDecomposition)]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (name, d) in ds {
        let n = d.dim;
        let mut s = Matrix::zeros(n, n);
        let mut c = Vector::zeros(n);
        for (u, a) in d.contacts.iter().zip(&d.weights) {
            s += u * u.transpose() * *a;
            c += u * *a;
        }
        let iso = op_norm(&(Matrix::identity(n, n) - s));
        let bary = c.norm();
        let trace = (d.weights.iter().sum::<f64>() - n as f64).abs();
        worst = worst.max(iso).max(bary).max(trace);
        if iso > DECOMPOSITION_TOL || bary > DECOMPOSITION_TOL || trace > DECOMPOSITION_TOL {
            failures.push(format!(
                "{name}: isotropy {iso:e}, barycenter {bary:e}, trace {trace:e}"
            ));
        }
    }
    outcome(
        failures,
        format!("{} decompositions, worst residual {worst:.2e}", ds.len()),
    )
}

fn criterion_2(ds: &[(String, JohnDecomposition)]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (name, d) in ds {
        let n = d.dim;
        let hull = VPolytope::new(n, d.contacts.clone()).unwrap();
        for _ in 0..100 {
            let x = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let g = hull
                .gauge(&(&x / (n as f64 * x.norm())))
                .unwrap_or(f64::INFINITY);
            worst = worst.max(g);
            if g > 1.0 + BALL_TOL {
                failures.push(format!("{name}: gauge {g}"));
                break;
            }
        }
    }
    outcome(failures, format!("max gauge {worst:.6}"))
}

fn criterion_3(ds: &[(String, JohnDecomposition)]) -> Outcome {
    let mut failures = Vec::new();
    let mut exhaustive_cases = 0;
    let mut largest = 0usize;
    for (name, d) in ds {
        let n = d.dim;
        for eps in [0.25, 0.5] {
            let budget = (16.0 * n as f64 / (eps * eps)).ceil() as usize;
            let barrier = sparsify(d, eps, budget, Strategy::Barrier, 0);
            match &barrier {
                Ok(s) => {
                    let a = audit_sparsification(s, d).unwrap();
                    let bound = 2.0 * eps / (3.0 * (n as f64).sqrt());
                    let ok = a.lambda_min >= 1.0 - eps
                        && a.lambda_max <= 1.0 + eps
                        && a.centroid_norm <= bound;
                    largest = largest.max(s.sigma.len());
                    if !ok || !a.pass || s.sigma.len() > budget {
                        failures.push(format!(
                            "{name} eps {eps}: audit {a:?}, |σ| = {}",
                            s.sigma.len()
                        ));
                    }
                }
                Err(e) => failures.push(format!("{name} eps {eps}: {e}")),
            }
            if d.len() <= 10 && n <= 3 {
                exhaustive_cases += 1;
                let ex = sparsify(d, eps, EXHAUSTIVE_BUDGET, Strategy::Exhaustive, 0);
                let ex_size = ex.as_ref().ok().map(|s| s.sigma.len());
                let bar_size = barrier.as_ref().ok().map(|s| s.sigma.len());
                // exhaustive search is complete up to its budget and returns a smallest multiset
                let agree = match (ex_size, bar_size) {
                    (Some(e), Some(b)) => e <= b,
                    (None, Some(b)) => b > EXHAUSTIVE_BUDGET,
                    (Some(_), None) => false,
                    (None, None) => true,
                };
                if !agree {
                    failures.push(format!(
                        "{name} eps {eps}: exhaustive {ex_size:?} vs barrier {bar_size:?}"
                    ));
                }
            }
        }
    }
    outcome(
        failures,
        format!("largest |σ| = {largest}, {exhaustive_cases} exhaustive comparisons"),
    )
}

fn scheduled_sparsifications(
    ds: &[(String, JohnDecomposition)],
) -> Vec<(String, usize, f64, qhelly::sparsify::SparseDecomposition)> {
    let mut out = Vec::new();
    for (name, d) in ds {
        let n = d.dim;
        for (schedule, delta) in [
            (Schedule::Volume, 1.0),
            (Schedule::Volume, 1.5),
            (Schedule::Volume, 2.0),
            (Schedule::Diameter, 1.0),
            (Schedule::Diameter, 2.0),
        ] {
            let eps = epsilon_schedule(n, delta, schedule);
            let budget = (16.0 * n as f64 / (eps * eps)).ceil() as usize;
            let s = sparsify(d, eps, budget, Strategy::Barrier, 0).expect("sparsification");
            out.push((name.clone(), n, eps, s));
        }
    }
    out
}

fn criterion_4(
    ds: &[(String, JohnDecomposition)],
    runs: &[(String, usize, f64, qhelly::sparsify::SparseDecomposition)],
) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_t = 0.0f64;
    for (name, n, eps, s) in runs {
        let d = &ds.iter().find(|(k, _)| k == name).unwrap().1;
        let ops = lifted_operators(s, d).unwrap();
        let (amin, amax) = eig_range(&ops.a);
        let (cmin, cmax) = eig_range(&ops.centered);
        let t = op_norm(&ops.t);
        worst_t = worst_t.max(t / eps);
        let assembled = (&ops.a + &ops.t - &ops.centered).amax();
        if amin < 1.0 - 2.0 * eps || amax > 1.0 + 2.0 * eps {
            failures.push(format!("{name} (n {n}, eps {eps}): A in [{amin}, {amax}]"));
        }
        if cmin < 1.0 - eps - 1e-12 || cmax > 1.0 + eps + 1e-12 {
            failures.push(format!("{name}: centred lift in [{cmin}, {cmax}]"));
        }
        if t > eps + T_TOL || assembled > 1e-12 {
            failures.push(format!(
                "{name}: ‖T‖ = {t}, eps {eps}, A + T mismatch {assembled:e}"
            ));
        }
    }
    outcome(
        failures,
        format!("{} runs, max ‖T‖/ε = {worst_t:.3}", runs.len()),
    )
}

fn criterion_5(
    ds: &[(String, JohnDecomposition)],
    runs: &[(String, usize, f64, qhelly::sparsify::SparseDecomposition)],
) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_sum = 0.0f64;
    for (name, n, eps, s) in runs {
        let d = &ds.iter().find(|(k, _)| k == name).unwrap().1;
        match bl_exponents(s, d) {
            Ok(bl) => {
                let gap = (bl.sum_k - (*n as f64 + 1.0)).abs();
                worst_sum = worst_sum.max(gap);
                let cap = 1.0 / (1.0 - 2.0 * eps);
                if gap > BL_SUM_TOL {
                    failures.push(format!("{name}: Σk = {}", bl.sum_k));
                }
                if bl
                    .k
                    .iter()
                    .any(|&k| !(k > 0.0) || k / bl.b > cap + BL_RATIO_TOL)
                {
                    failures.push(format!("{name}: exponent ratio above {cap}"));
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    outcome(
        failures,
        format!("{} runs, max |Σk - (n+1)| = {worst_sum:.2e}", runs.len()),
    )
}

fn volume_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::Volume, FamilyKind::RandomPolytope)
        .with_grid(&[2, 3, 4, 5], &[1.0, 1.5, 2.0])
        .with_trials(5)
        .with_seed(6);
    cfg.selection.oracle.choice = OracleChoice::Exact;
    cfg
}

fn criterion_6(report: &BoundReport) -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for row in &report.rows {
        let tag = format!("n {} δ {} trial {}", row.n, row.delta, row.trial);
        let (Some(s), Some(achieved)) = (row.s, row.achieved) else {
            failures.push(format!("{tag}: {:?}", row.error));
            continue;
        };
        let n = row.n as f64;
        let eps = 0.25 * n.powf((1.0 - row.delta) / 2.0);
        let cap = (16.0 * n / (eps * eps)).ceil() as usize + row.n + 1;
        // recompute the ratio from the stored indices with the exact oracle
        let spec = FamilySpec::new(FamilyKind::RandomPolytope, row.n, 4 * row.n, row.seed);
        let p = generate_family(&spec).unwrap().polytope;
        let q = p.subfamily(&row.indices).unwrap();
        let ratio = (volume_exact(&q).unwrap() / volume_exact(&p).unwrap()).powf(1.0 / n);
        let normalized = ratio / n.powf((3.0 - row.delta) / 2.0);
        worst = worst.max(normalized);
        if s > cap || s != row.indices.len() {
            failures.push(format!("{tag}: s = {s} above cap {cap}"));
        }
        if ratio < 1.0 - 1e-9 || (ratio - achieved).abs() > 1e-9 * ratio {
            failures.push(format!("{tag}: ratio {ratio} (reported {achieved})"));
        }
        if normalized > REPORT_CONSTANT {
            failures.push(format!("{tag}: normalized {normalized}"));
        }
    }
    outcome(
        failures,
        format!(
            "{} rows, max normalized ratio {worst:.3}",
            report.rows.len()
        ),
    )
}

fn diameter_configs() -> Vec<ExperimentConfig> {
    [FamilyKind::Cube, FamilyKind::RandomStrips]
        .into_iter()
        .map(|kind| {
            ExperimentConfig::new(Experiment::Diameter, kind)
                .with_grid(&[2, 3, 4, 5], &[1.0, 2.0])
                .with_trials(if kind == FamilyKind::Cube { 1 } else { 3 })
                .with_seed(7)
        })
        .collect()
}

fn criterion_7(reports: &[BoundReport]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut rows = 0;
    for report in reports {
        for row in &report.rows {
            rows += 1;
            let tag = format!(
                "{:?} n {} δ {} trial {}",
                report.config.family.kind, row.n, row.delta, row.trial
            );
            let (Some(s), Some(cap), Some(beta)) = (row.s, row.cap, row.achieved) else {
                failures.push(format!("{tag}: {:?}", row.error));
                continue;
            };
            let fam = generate_family(&report.config.family_for(row.n, row.seed)).unwrap();
            let q = HPolytope::new(
                row.n,
                row.indices
                    .iter()
                    .flat_map(|&i| fam.bodies[i].halfspaces().to_vec())
                    .collect(),
            )
            .unwrap();
            let res: qhelly::helly::SelectionResult = {
                let mut opts = report.config.selection;
                opts.seed = row.seed;
                opts.oracle.seed = row.seed;
                qhelly::helly::select_diameter_subfamily(&fam.bodies, row.delta, &opts).unwrap()
            };
            let cert = check_containment(&q, &fam.polytope, beta, &res.z).unwrap();
            let normalized = beta / (row.n as f64).powf(2.0 - row.delta / 2.0);
            worst = worst.max(normalized);
            if !cert.satisfied || res.indices != row.indices {
                failures.push(format!(
                    "{tag}: containment at β = {beta} not certified (max gauge {})",
                    cert.max_gauge
                ));
            }
            if normalized > REPORT_CONSTANT || s > cap {
                failures.push(format!(
                    "{tag}: β/n^(2-δ/2) = {normalized}, s = {s}, cap = {cap}"
                ));
            }
        }
    }
    outcome(failures, format!("{rows} rows, max β/n^(2-δ/2) {worst:.3}"))
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    for n in 2..=6 {
        let cube = HPolytope::cube(n);
        if !is_bounded(&cube).unwrap() {
            failures.push(format!("cube {n} reported unbounded"));
        }
        for drop in 0..cube.len() {
            let keep: Vec<usize> = (0..cube.len()).filter(|&i| i != drop).collect();
            if is_bounded(&cube.subfamily(&keep).unwrap()).unwrap() {
                failures.push(format!("n {n}: dropping facet {drop} stays bounded"));
            }
        }
    }
    outcome(
        failures,
        "every facet of the cube is necessary for n = 2..6".into(),
    )
}

fn lowerbound_report() -> BoundReport {
    run_lowerbound_experiment(&[2, 3, 4], 1.0, 64, 50, 9).expect("lower-bound experiment")
}

fn criterion_9(report: &BoundReport) -> Outcome {
    let mut failures = Vec::new();
    let stats: Vec<f64> = report
        .rows
        .iter()
        .map(|r| r.normalized.unwrap_or(f64::NAN))
        .collect();
    for (row, &s) in report.rows.iter().zip(&stats) {
        if !(s >= LOWERBOUND_FLOOR) {
            failures.push(format!("n {}: statistic {s}", row.n));
        }
    }
    outcome(
        failures,
        format!("statistics {stats:.4?} ≥ {LOWERBOUND_FLOOR}"),
    )
}

fn bytes(r: &BoundReport) -> (Vec<u8>, Vec<u8>) {
    (
        render_report(r, ReportFormat::Csv).unwrap(),
        render_report(r, ReportFormat::Json).unwrap(),
    )
}

fn criterion_10(first: &[BoundReport]) -> Outcome {
    let cfgs = diameter_configs();
    let second: Vec<BoundReport> =
        std::iter::once(run_volume_experiment(&volume_config()).unwrap())
            .chain(cfgs.iter().map(|c| run_diameter_experiment(c).unwrap()))
            .chain(std::iter::once(lowerbound_report()))
            .collect();
    let failures: Vec<String> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| bytes(a) != bytes(b))
        .map(|(a, _)| format!("{:?} report differs", a.config.experiment))
        .collect();
    outcome(
        failures,
        format!("{} reports byte-identical in CSV and JSON", first.len()),
    )
}

fn main() {
    let mut all_pass = true;
    let mut report_line = |k: usize, name: &str, o: Outcome, t: Duration| {
        all_pass &= o.pass;
        println!(
            "criterion {k:>2} [{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.as_secs_f64()
        );
    };

    let t = Instant::now();
    let ds = decompositions();
    report_line(
        1,
        "decomposition of the identity",
        criterion_1(&ds),
        t.elapsed(),
    );
    let t = Instant::now();
    report_line(
        2,
        "ball inside the contact hull",
        criterion_2(&ds),
        t.elapsed(),
    );
    let t = Instant::now();
    report_line(3, "sparsifier contract", criterion_3(&ds), t.elapsed());
    let t = Instant::now();
    let runs = scheduled_sparsifications(&ds);
    report_line(
        4,
        "lifted sandwich and T bound",
        criterion_4(&ds, &runs),
        t.elapsed(),
    );
    let t = Instant::now();
    report_line(5, "exponents", criterion_5(&ds, &runs), t.elapsed());

    let t = Instant::now();
    let volume = run_volume_experiment(&volume_config()).expect("volume experiment");
    report_line(6, "volume selection", criterion_6(&volume), t.elapsed());
    let t = Instant::now();
    let diameter: Vec<BoundReport> = diameter_configs()
        .iter()
        .map(|c| run_diameter_experiment(c).expect("diameter experiment"))
        .collect();
    report_line(7, "diameter selection", criterion_7(&diameter), t.elapsed());
    let t = Instant::now();
    report_line(8, "cube sharpness", criterion_8(), t.elapsed());
    let t = Instant::now();
    let lower = lowerbound_report();
    report_line(
        9,
        "random strips lower bound",
        criterion_9(&lower),
        t.elapsed(),
    );
    let t = Instant::now();
    let first: Vec<BoundReport> = std::iter::once(volume)
        .chain(diameter)
        .chain(std::iter::once(lower))
        .collect();
    report_line(10, "determinism", criterion_10(&first), t.elapsed());

    if !all_pass {
        std::process::exit(1);
    }
}
