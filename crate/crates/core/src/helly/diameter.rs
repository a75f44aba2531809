use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::volume::centroid_caratheodory;
use super::{check_delta, OracleMode, Pipeline, SelectionOptions, SelectionResult};
use crate::convex::{
    chebyshev_center, enumerate_vertices, Body, ContainmentProbe, HPolytope, HalfSpace, VPolytope,
    DEFAULT_MAX_DIM,
};
use crate::error::{Error, Result};
use crate::john::{
    contact_indices, ensure_in_position, recover_weights, solve_mvie, MvieOptions, POSITION_TOL,
};
use crate::linalg::{serde_vec, unit, Vector};
use crate::sparsify::{epsilon_schedule, sparsify, Schedule};

pub const BETA_BISECTION_STEPS: usize = 40;
/// Slack when deciding `v ∈ C°` by its gauge.
const MEMBERSHIP_TOL: f64 = 1e-8;
const TIE_TOL: f64 = 1e-12;
/// Directions probed when the polar of `conv(X)` is too large to enumerate.
const SPHERE_SAMPLES: usize = 4000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThriftyApproximation {
    /// Indices into the points of `K`.
    pub indices: Vec<usize>,
    /// The unit vectors `X`.
    #[serde(with = "serde_vec::list")]
    pub points: Vec<Vector>,
    /// Smallest `t` with `B ⊆ t·conv(X)`.
    pub factor: f64,
    /// `false` when `factor` is a lower estimate from sampled directions.
    pub factor_exact: bool,
    pub epsilon: f64,
    pub budget: usize,
    pub sigma_size: usize,
    pub tau_size: usize,
    pub contacts: usize,
    pub residual_identity: f64,
    pub residual_barycenter: f64,
}

/// Few contact points `X` of `K` (in Löwner position) such that the ball sits
/// inside a moderate multiple of `conv(X)`.
pub fn thrifty_approximation(
    k: &VPolytope,
    delta: f64,
    opts: &SelectionOptions,
) -> Result<ThriftyApproximation> {
    check_delta(delta)?;
    let n = k.dim();
    let body = Body::V(k.clone());
    ensure_in_position(&body, POSITION_TOL)?;
    let (point_indices, contacts) = contact_indices(&body, opts.contact_tol)?;
    if contacts.len() < n + 1 {
        return Err(Error::TooFewContacts {
            found: contacts.len(),
            needed: n + 1,
        });
    }
    let d = recover_weights(&contacts)?;
    let epsilon = epsilon_schedule(n, delta, Schedule::Diameter);
    let budget = opts.budget(n, epsilon);
    let sparse = sparsify(&d, epsilon, budget, opts.strategy, opts.seed)?;
    let tau = centroid_caratheodory(&d, &sparse, epsilon)?;
    let mut chosen: Vec<usize> = sparse.sigma.iter().chain(&tau).copied().collect();
    chosen.sort_unstable();
    chosen.dedup();
    let points: Vec<Vector> = chosen.iter().map(|&j| d.contacts[j].clone()).collect();
    let indices = chosen.iter().map(|&j| point_indices[d.origin[j]]).collect();
    let (factor, factor_exact) = ball_factor(n, &points, opts.seed)?;
    Ok(ThriftyApproximation {
        indices,
        points,
        factor,
        factor_exact,
        epsilon,
        budget,
        sigma_size: sparse.sigma.len(),
        tau_size: tau.len(),
        contacts: d.len(),
        residual_identity: d.residual_identity,
        residual_barycenter: d.residual_barycenter,
    })
}

/// `max_{|θ|=1} gauge_{conv X}(θ)`, which equals the largest norm of a vertex
/// of the polar `{y : ⟨x, y⟩ ≤ 1, x ∈ X}`.
fn ball_factor(n: usize, points: &[Vector], seed: u64) -> Result<(f64, bool)> {
    if n <= DEFAULT_MAX_DIM {
        let polar = HPolytope::from_normals(n, points.iter().cloned())?;
        return match enumerate_vertices(&polar) {
            Ok(v) => Ok((
                v.vertices().iter().map(|y| y.norm()).fold(0.0, f64::max),
                true,
            )),
            Err(Error::Unbounded) => Ok((f64::INFINITY, true)),
            Err(e) => Err(e),
        };
    }
    let hull = VPolytope::new(n, points.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs: Vec<Vector> = (0..n).flat_map(|k| [unit(n, k), -unit(n, k)]).collect();
    dirs.extend((0..SPHERE_SAMPLES).map(|_| {
        let v = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm = v.norm();
        v / norm
    }));
    let mut best = 0.0f64;
    for d in &dirs {
        match hull.gauge_unchecked(d) {
            Ok(g) => best = best.max(g),
            Err(Error::OriginNotInterior) => return Ok((f64::INFINITY, false)),
            Err(e) => return Err(e),
        }
    }
    Ok((best, false))
}

/// Diameter pipeline. Moves the John centre `c` of `P = ∩ bodies` to the
/// origin and maps its John ellipsoid to the ball, so that the polar of `P` is
/// in Löwner position; selects contact points of the polar and keeps one body
/// owning each. Returns `z = -c` and the certified `β` with `z + Q ⊆ β(z + P)`.
pub fn select_diameter_subfamily(
    bodies: &[HPolytope],
    delta: f64,
    opts: &SelectionOptions,
) -> Result<SelectionResult> {
    check_delta(delta)?;
    let first = bodies
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
    let n = first.dim();
    if let Some(b) = bodies.iter().find(|b| b.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.dim(),
        });
    }
    let mut owner = Vec::new();
    let mut all: Vec<HalfSpace> = Vec::new();
    for (i, b) in bodies.iter().enumerate() {
        owner.extend(std::iter::repeat_n(i, b.len()));
        all.extend(b.halfspaces().iter().cloned());
    }
    let p = HPolytope::new(n, all)?;
    match chebyshev_center(&p) {
        Ok((_, r)) if r > 1e-9 => {}
        Ok(_) | Err(Error::InfeasibleBody) => return Err(Error::EmptyInterior),
        Err(e) => return Err(e),
    }
    let e = solve_mvie(&p, MvieOptions::default())?;
    let c = e.center.clone();
    // x = c + E y turns ⟨a, x⟩ ≤ b into ⟨Eᵀa, y⟩ ≤ b - ⟨a, c⟩
    let generators: Vec<Vector> = p
        .halfspaces()
        .iter()
        .map(|h| e.root.transpose() * &h.normal / (h.offset - h.normal.dot(&c)))
        .collect();
    let k = VPolytope::new(n, generators.clone())?;
    let thrifty = thrifty_approximation(&k, delta, opts)?;

    let polars: Vec<VPolytope> = bodies
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let gens = (0..generators.len())
                .filter(|&h| owner[h] == i)
                .map(|h| generators[h].clone())
                .collect();
            VPolytope::new(n, gens)
        })
        .collect::<Result<_>>()?;
    let mut indices = Vec::with_capacity(thrifty.indices.len());
    for &h in &thrifty.indices {
        indices.push(attribute(&polars, &generators[h])?);
    }
    indices.sort_unstable();
    indices.dedup();

    let mut selected = Vec::new();
    for &i in &indices {
        selected.extend(bodies[i].halfspaces().iter().cloned());
    }
    let q = HPolytope::new(n, selected)?;
    let z = -&c;
    let probe = ContainmentProbe::new(&q, &p, &z)?;
    let (beta, certified) = bisect_beta(&probe, n);

    let nd = (n as f64).powf(delta);
    let cap = thrifty.budget + n + 1;
    let exponent = Pipeline::Diameter.bound_exponent(delta);
    let s = indices.len();
    Ok(SelectionResult {
        pipeline: Pipeline::Diameter,
        dim: n,
        delta,
        s,
        indices,
        admissible_cap: cap,
        alpha_cap: cap as f64 / nd,
        alpha_implied: s as f64 / nd,
        z,
        achieved: Some(beta),
        stderr: None,
        oracle_mode: OracleMode::Exact,
        bound_exponent: exponent,
        bound: (n as f64).powf(exponent),
        epsilon: Some(thrifty.epsilon),
        budget: Some(thrifty.budget),
        strategy: Some(opts.strategy),
        sigma_size: thrifty.sigma_size,
        tau_size: thrifty.tau_size,
        contacts: thrifty.contacts,
        residual_identity: thrifty.residual_identity,
        residual_barycenter: thrifty.residual_barycenter,
        certified: Some(certified),
    })
}

/// Body whose polar contains `v` with the smallest gauge; ties go to the
/// lowest index. `C° = conv(0 ∪ G)`, so its gauge is the cone LP over `G`.
fn attribute(polars: &[VPolytope], v: &Vector) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, polar) in polars.iter().enumerate() {
        let g = match polar.gauge_unchecked(v) {
            Ok(g) => g,
            Err(Error::OriginNotInterior) => continue,
            Err(e) => return Err(e),
        };
        if g <= 1.0 + MEMBERSHIP_TOL && best.is_none_or(|(_, bg)| g < bg - TIE_TOL) {
            best = Some((i, g));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::SolverFailed("selected contact lies in no polar body".into()))
}

/// Smallest certified `β` in `[1, 10 n²]` by bisection; `(max gauge, false)`
/// when the range is too small.
fn bisect_beta(probe: &ContainmentProbe, n: usize) -> (f64, bool) {
    let mut lo = 1.0;
    let mut hi = 10.0 * (n * n) as f64;
    if !probe.holds_at(hi) {
        return (probe.max_gauge(), false);
    }
    if probe.holds_at(lo) {
        return (lo, true);
    }
    for _ in 0..BETA_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if probe.holds_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, true)
}
