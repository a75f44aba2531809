//! Sparse approximate decompositions of the identity.
//!
//! Given unit contacts `u_j` with weights `a_j` (`Σ a_j u_j ⊗ u_j = Id`,
//! `Σ a_j u_j = 0`), find a multiset `σ` such that, with `ū` the mean of
//! `{u_j : j ∈ σ}`,
//!
//! ```text
//!   (1-ε) Id ⪯ (n/|σ|) Σ_{j∈σ} (u_j - ū) ⊗ (u_j - ū) ⪯ (1+ε) Id,   ‖ū‖ ≤ 2ε/(3√n).
//! ```
//!
//! The barrier strategy works with the lifted unit vectors
//! `y_j = √(n/(n+1)) (u_j, 1/√n)` in `R^{n+1}`, which satisfy
//! `Σ (a_j/n) y_j ⊗ y_j = Id/(n+1)`. For `L = ((n+1)/|σ|) Σ_σ y_j ⊗ y_j` the
//! Schur complement of the last diagonal entry is exactly the centred matrix
//! above and the off-diagonal block is `√n ū`, so `‖L - Id‖ ≤ 2ε/3` gives both
//! conditions at once. The strategy greedily adds the vector that minimises a
//! two-sided barrier potential around `(k/(n+1)) Id` and stops at the first
//! prefix that passes the audit.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::john::JohnDecomposition;
use crate::linalg::{outer, serde_vec, sym_eigen, Matrix, Vector};

pub const MAX_EPSILON: f64 = 0.75;
/// Default budget is `⌈BUDGET_FACTOR · n / ε²⌉`.
pub const BUDGET_FACTOR: f64 = 16.0;
pub const SAMPLING_RETRIES: u64 = 50;
pub const EXHAUSTIVE_MAX_SOURCE: usize = 12;
pub const EXHAUSTIVE_MAX_BUDGET: usize = 8;

/// Half-width floor of the barrier window, in units of one added vector.
const BARRIER_WIDTH: f64 = 2.0;
const BARRIER_MARGIN: f64 = 0.5;
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Barrier,
    Sampling,
    Exhaustive,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "barrier" => Ok(Strategy::Barrier),
            "sampling" => Ok(Strategy::Sampling),
            "exhaustive" => Ok(Strategy::Exhaustive),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Volume,
    Diameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseDecomposition {
    pub dim: usize,
    pub source_size: usize,
    /// Indices into the source contacts, with repetition, in selection order.
    pub sigma: Vec<usize>,
    /// `(1/|σ|) Σ_{j∈σ} u_j`
    #[serde(with = "serde_vec")]
    pub centroid: Vector,
    pub epsilon_target: f64,
    pub epsilon_achieved: f64,
    pub centroid_norm: f64,
    pub budget: usize,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsificationAudit {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub centroid_norm: f64,
    pub pass: bool,
}

impl SparsificationAudit {
    pub fn epsilon_achieved(&self) -> f64 {
        (self.lambda_max - 1.0).max(1.0 - self.lambda_min)
    }
}

/// `¼ n^{(1-δ)/2}` for the volume pipeline, `¼ n^{1/2-δ/2}` for the diameter one.
pub fn epsilon_schedule(n: usize, delta: f64, schedule: Schedule) -> f64 {
    let n = n as f64;
    match schedule {
        Schedule::Volume => 0.25 * n.powf((1.0 - delta) / 2.0),
        Schedule::Diameter => 0.25 * n.powf(0.5 - delta / 2.0),
    }
}

pub fn default_budget(n: usize, epsilon: f64) -> usize {
    (BUDGET_FACTOR * n as f64 / (epsilon * epsilon)).ceil() as usize
}

pub fn centroid_bound(n: usize, epsilon: f64) -> f64 {
    2.0 * epsilon / (3.0 * (n as f64).sqrt())
}

/// Extreme eigenvalues of the centred matrix and centroid of a multiset.
fn measure(n: usize, vectors: &[&Vector]) -> (f64, f64, Vector) {
    let k = vectors.len();
    if k == 0 {
        return (0.0, 0.0, Vector::zeros(n));
    }
    let mean = vectors.iter().fold(Vector::zeros(n), |acc, v| acc + *v) / k as f64;
    let mut c = Matrix::zeros(n, n);
    for v in vectors {
        let r = *v - &mean;
        c += outer(&r, &r);
    }
    c *= n as f64 / k as f64;
    let e = sym_eigen(&c);
    (e.min(), e.max(), mean)
}

fn passes(lmin: f64, lmax: f64, cnorm: f64, n: usize, eps: f64) -> bool {
    lmin >= 1.0 - eps && lmax <= 1.0 + eps && cnorm <= centroid_bound(n, eps)
}

/// Recompute the sandwich and centroid bound of `s` against its source.
pub fn audit_sparsification(
    s: &SparseDecomposition,
    source: &JohnDecomposition,
) -> Result<SparsificationAudit> {
    let m = source.contacts.len();
    let mut vs = Vec::with_capacity(s.sigma.len());
    for &j in &s.sigma {
        vs.push(
            source
                .contacts
                .get(j)
                .ok_or(Error::IndexOutOfRange { index: j, len: m })?,
        );
    }
    let (lmin, lmax, mean) = measure(source.dim, &vs);
    let cnorm = mean.norm();
    Ok(SparsificationAudit {
        lambda_min: lmin,
        lambda_max: lmax,
        centroid_norm: cnorm,
        pass: !vs.is_empty() && passes(lmin, lmax, cnorm, source.dim, s.epsilon_target),
    })
}

fn finish(
    d: &JohnDecomposition,
    sigma: Vec<usize>,
    eps: f64,
    budget: usize,
    strategy: Strategy,
) -> SparseDecomposition {
    let vs: Vec<&Vector> = sigma.iter().map(|&j| &d.contacts[j]).collect();
    let (lmin, lmax, mean) = measure(d.dim, &vs);
    SparseDecomposition {
        dim: d.dim,
        source_size: d.contacts.len(),
        centroid_norm: mean.norm(),
        centroid: mean,
        epsilon_target: eps,
        epsilon_achieved: (lmax - 1.0).max(1.0 - lmin),
        budget,
        strategy,
        sigma,
    }
}

/// Select a multiset meeting `(ε, 2ε/(3√n))` within `budget` elements.
pub fn sparsify(
    d: &JohnDecomposition,
    epsilon: f64,
    budget: usize,
    strategy: Strategy,
    seed: u64,
) -> Result<SparseDecomposition> {
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, {MAX_EPSILON}], got {epsilon}"
        )));
    }
    let n = d.dim;
    if budget < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} is below n + 1 = {}",
            n + 1
        )));
    }
    d.check_well_formed()?;
    let sigma = match strategy {
        Strategy::Barrier => barrier(d, epsilon, budget),
        Strategy::Sampling => sampling(d, epsilon, budget, seed),
        Strategy::Exhaustive => exhaustive(d, epsilon, budget)?,
    };
    let sigma = sigma.ok_or(Error::BudgetInfeasible { budget, epsilon })?;
    Ok(finish(d, sigma, epsilon, budget, strategy))
}

/// Running check of prefixes: keeps `Σ u_j` and `Σ u_j ⊗ u_j`.
struct PrefixAudit {
    n: usize,
    sum: Vector,
    second: Matrix,
    k: usize,
}

impl PrefixAudit {
    fn new(n: usize) -> Self {
        Self {
            n,
            sum: Vector::zeros(n),
            second: Matrix::zeros(n, n),
            k: 0,
        }
    }

    fn push(&mut self, u: &Vector) {
        self.sum += u;
        self.second += outer(u, u);
        self.k += 1;
    }

    fn passes(&self, eps: f64) -> bool {
        if self.k <= self.n {
            return false;
        }
        let k = self.k as f64;
        let mean = &self.sum / k;
        if mean.norm() > centroid_bound(self.n, eps) {
            return false;
        }
        // (n/k) Σ (u - ū)(u - ū)ᵀ = (n/k) (Σ u uᵀ - k ū ūᵀ)
        let c = (&self.second - outer(&mean, &mean) * k) * (self.n as f64 / k);
        let e = sym_eigen(&c);
        passes(e.min(), e.max(), mean.norm(), self.n, eps)
    }
}

fn lifted(d: &JohnDecomposition) -> Vec<Vector> {
    let n = d.dim as f64;
    let s = (n / (n + 1.0)).sqrt();
    d.contacts
        .iter()
        .map(|u| {
            let mut y = u.clone().insert_row(d.dim, 1.0 / n.sqrt());
            y *= s;
            y
        })
        .collect()
}

fn barrier(d: &JohnDecomposition, eps: f64, budget: usize) -> Option<Vec<usize>> {
    let n = d.dim;
    let big_n = n + 1;
    let ys = lifted(d);
    let mut s = Matrix::zeros(big_n, big_n);
    let mut sigma = Vec::new();
    let mut audit = PrefixAudit::new(n);

    for k in 0..budget {
        let t = (k + 1) as f64 / big_n as f64;
        let e = sym_eigen(&s);
        let width = BARRIER_WIDTH
            .max(e.max() + 1.0 - t + BARRIER_MARGIN)
            .max(t - e.min() + BARRIER_MARGIN);
        let upper = t + width;
        let lower = t - width;
        let inv_u: Vec<f64> = e.values.iter().map(|l| 1.0 / (upper - l)).collect();
        let inv_l: Vec<f64> = e.values.iter().map(|l| 1.0 / (l - lower)).collect();
        let tr_u: f64 = inv_u.iter().sum();
        let tr_l: f64 = inv_l.iter().sum();

        let phis: Vec<f64> = ys
            .iter()
            .map(|y| {
                let z = e.vectors.transpose() * y;
                let (mut qu, mut qu2, mut ql, mut ql2) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..big_n {
                    let z2 = z[i] * z[i];
                    qu += z2 * inv_u[i];
                    qu2 += z2 * inv_u[i] * inv_u[i];
                    ql += z2 * inv_l[i];
                    ql2 += z2 * inv_l[i] * inv_l[i];
                }
                tr_u + qu2 / (1.0 - qu) + tr_l - ql2 / (1.0 + ql)
            })
            .collect();
        // near-ties go to the lowest index so the choice survives rounding noise
        let min = phis.iter().copied().fold(f64::INFINITY, f64::min);
        let cut = min + TIE_TOL * (min.abs() + 1.0);
        let j = phis.iter().position(|&phi| phi <= cut)?;
        s += outer(&ys[j], &ys[j]);
        sigma.push(j);
        audit.push(&d.contacts[j]);
        if audit.passes(eps) {
            return Some(sigma);
        }
    }
    None
}

/// Prefix sizes checked by the sampling strategy: `n+1, 2(n+1), 4(n+1), …, budget`.
fn sampling_checkpoints(n: usize, budget: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = n + 1;
    while k < budget {
        out.push(k);
        k *= 2;
    }
    out.push(budget);
    out
}

fn sampling(d: &JohnDecomposition, eps: f64, budget: usize, seed: u64) -> Option<Vec<usize>> {
    let n = d.dim;
    let dist = WeightedIndex::new(&d.weights).ok()?;
    let checkpoints = sampling_checkpoints(n, budget);
    (0..SAMPLING_RETRIES)
        .into_par_iter()
        .find_map_first(|retry| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(retry),
            );
            let mut sigma = Vec::with_capacity(budget);
            let mut audit = PrefixAudit::new(n);
            for &cp in &checkpoints {
                while sigma.len() < cp {
                    let j = dist.sample(&mut rng);
                    sigma.push(j);
                    audit.push(&d.contacts[j]);
                }
                if audit.passes(eps) {
                    return Some(sigma);
                }
            }
            None
        })
}

fn exhaustive(d: &JohnDecomposition, eps: f64, budget: usize) -> Result<Option<Vec<usize>>> {
    let m = d.contacts.len();
    if m > EXHAUSTIVE_MAX_SOURCE || budget > EXHAUSTIVE_MAX_BUDGET {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search needs at most {EXHAUSTIVE_MAX_SOURCE} contacts and budget at most {EXHAUSTIVE_MAX_BUDGET} (got {m}, {budget})"
        )));
    }
    for k in 1..=budget {
        if let Some(s) = first_multiset(d, eps, k) {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Lexicographically first non-decreasing index sequence of length `k` that passes.
pub(crate) fn first_multiset(d: &JohnDecomposition, eps: f64, k: usize) -> Option<Vec<usize>> {
    let m = d.contacts.len();
    if m == 0 {
        return None;
    }
    let mut idx = vec![0usize; k];
    loop {
        let vs: Vec<&Vector> = idx.iter().map(|&j| &d.contacts[j]).collect();
        let (lmin, lmax, mean) = measure(d.dim, &vs);
        if passes(lmin, lmax, mean.norm(), d.dim, eps) {
            return Some(idx);
        }
        // next multiset in lexicographic order
        let mut p = k;
        loop {
            if p == 0 {
                return None;
            }
            p -= 1;
            if idx[p] + 1 < m {
                let v = idx[p] + 1;
                for q in idx.iter_mut().skip(p) {
                    *q = v;
                }
                break;
            }
        }
    }
}
