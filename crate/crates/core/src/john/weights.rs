//! Weights of a decomposition of the identity `Id = Σ a_j u_j ⊗ u_j` with
//! `Σ a_j u_j = 0`, recovered by nonnegative least squares.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::convex::VPolytope;
use crate::error::{Error, Result};
use crate::linalg::{outer, serde_vec, sym_op_norm, Matrix, Vector};

/// Weights below this are dropped together with their contact.
pub const WEIGHT_FLOOR: f64 = 1e-10;
/// `recover_weights` fails above this identity residual.
pub const MAX_IDENTITY_RESIDUAL: f64 = 1e-4;
/// Default audit tolerance for a decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-6;

const AUDIT_SEED: u64 = 0x6a6f_686e;
const AUDIT_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawDecomposition", into = "RawDecomposition")]
pub struct JohnDecomposition {
    pub dim: usize,
    pub contacts: Vec<Vector>,
    pub weights: Vec<f64>,
    /// `‖Id - Σ a_j u_j ⊗ u_j‖_op`
    pub residual_identity: f64,
    /// `‖Σ a_j u_j‖₂`
    pub residual_barycenter: f64,
    /// Position of each kept contact in the list given to `recover_weights`.
    pub origin: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Residuals {
    identity: f64,
    barycenter: f64,
}

#[derive(Serialize, Deserialize)]
struct RawDecomposition {
    dim: usize,
    #[serde(with = "serde_vec::list")]
    contacts: Vec<Vector>,
    weights: Vec<f64>,
    residuals: Residuals,
}

impl From<RawDecomposition> for JohnDecomposition {
    fn from(r: RawDecomposition) -> Self {
        let origin = (0..r.contacts.len()).collect();
        Self {
            dim: r.dim,
            contacts: r.contacts,
            weights: r.weights,
            residual_identity: r.residuals.identity,
            residual_barycenter: r.residuals.barycenter,
            origin,
        }
    }
}

impl From<JohnDecomposition> for RawDecomposition {
    fn from(d: JohnDecomposition) -> Self {
        Self {
            dim: d.dim,
            contacts: d.contacts,
            weights: d.weights,
            residuals: Residuals {
                identity: d.residual_identity,
                barycenter: d.residual_barycenter,
            },
        }
    }
}

impl JohnDecomposition {
    /// Build from given contacts and weights, computing both residuals.
    pub fn new(dim: usize, contacts: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        if contacts.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: contacts.len(),
                got: weights.len(),
            });
        }
        if let Some(u) = contacts.iter().find(|u| u.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: u.len(),
            });
        }
        let (ri, rb) = residuals(dim, &contacts, &weights);
        let origin = (0..contacts.len()).collect();
        Ok(Self {
            dim,
            contacts,
            weights,
            residual_identity: ri,
            residual_barycenter: rb,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    /// Structural checks: lengths agree, unit contacts, positive weights.
    pub fn check_well_formed(&self) -> Result<()> {
        if self.contacts.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.contacts.len(),
                got: self.weights.len(),
            });
        }
        for u in &self.contacts {
            if u.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: u.len(),
                });
            }
            if (u.norm() - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "contact of norm {} is not a unit vector",
                    u.norm()
                )));
            }
        }
        if self.weights.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        Ok(())
    }
}

fn residuals(dim: usize, contacts: &[Vector], weights: &[f64]) -> (f64, f64) {
    let mut m = Matrix::identity(dim, dim);
    let mut bary = Vector::zeros(dim);
    for (u, a) in contacts.iter().zip(weights) {
        m -= outer(u, u) * *a;
        bary += u * *a;
    }
    (sym_op_norm(&m), bary.norm())
}

const TIE_TOL: f64 = 1e-7;

/// Solve `min ‖Ax - b‖₂` subject to `x ≥ 0` (Lawson–Hanson active set).
pub fn nnls(a: &Matrix, b: &Vector) -> Vector {
    let cols = a.ncols();
    let mut x = Vector::zeros(cols);
    let mut passive = vec![false; cols];
    let scale = a.amax().max(1.0) * b.amax().max(1.0);
    let tol = 1e-13 * scale * cols.max(1) as f64;

    for _ in 0..3 * cols + 10 {
        let w = a.transpose() * (b - a * &x);
        let best = (0..cols)
            .filter(|&j| !passive[j])
            .map(|j| w[j])
            .fold(f64::NEG_INFINITY, f64::max);
        // near-ties go to the lowest index so the choice survives rounding noise
        let cut = best - TIE_TOL * (best.abs() + 1.0);
        let candidate = (0..cols).find(|&j| !passive[j] && w[j] >= cut);
        let Some(t) = candidate.filter(|&t| w[t] > tol) else {
            break;
        };
        passive[t] = true;

        for _ in 0..3 * cols + 10 {
            let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
            let sub = Matrix::from_fn(a.nrows(), idx.len(), |i, k| a[(i, idx[k])]);
            let s_p = sub
                .svd(true, true)
                .solve(b, 1e-14)
                .unwrap_or_else(|_| Vector::zeros(idx.len()));
            if s_p.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = s_p[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if s_p[k] <= 0.0 {
                    let denom = x[j] - s_p[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (s_p[k] - x[j]);
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

/// Weights `a_j ≥ 0` with `Σ a_j u_j ⊗ u_j = Id`, `Σ a_j u_j = 0`, `Σ a_j = n`.
///
/// The least-squares system stacks the `n(n+1)/2` upper-triangular identity
/// entries (off-diagonal rows scaled by `√2` so the residual is the Frobenius
/// gap), the `n` barycenter rows and the trace row.
pub fn recover_weights(contacts: &[Vector]) -> Result<JohnDecomposition> {
    let Some(first) = contacts.first() else {
        return Err(Error::NoValidDecomposition { residual: 1.0 });
    };
    let n = first.len();
    if let Some(u) = contacts.iter().find(|u| u.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: u.len(),
        });
    }
    let m = contacts.len();
    let rows = n * (n + 1) / 2 + n + 1;
    let mut a = Matrix::zeros(rows, m);
    let mut b = Vector::zeros(rows);
    let s2 = std::f64::consts::SQRT_2;
    let mut r = 0;
    for p in 0..n {
        for q in p..n {
            let w = if p == q { 1.0 } else { s2 };
            for (j, u) in contacts.iter().enumerate() {
                a[(r, j)] = w * u[p] * u[q];
            }
            b[r] = if p == q { 1.0 } else { 0.0 };
            r += 1;
        }
    }
    for p in 0..n {
        for (j, u) in contacts.iter().enumerate() {
            a[(r, j)] = u[p];
        }
        r += 1;
    }
    for j in 0..m {
        a[(r, j)] = 1.0;
    }
    b[r] = n as f64;

    let x = nnls(&a, &b);
    let origin: Vec<usize> = (0..m).filter(|&j| x[j] >= WEIGHT_FLOOR).collect();
    let kept: Vec<Vector> = origin.iter().map(|&j| contacts[j].clone()).collect();
    let weights: Vec<f64> = origin.iter().map(|&j| x[j]).collect();
    let (ri, rb) = residuals(n, &kept, &weights);
    if ri > MAX_IDENTITY_RESIDUAL {
        return Err(Error::NoValidDecomposition { residual: ri });
    }
    Ok(JohnDecomposition {
        dim: n,
        contacts: kept,
        weights,
        residual_identity: ri,
        residual_barycenter: rb,
        origin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub tol: f64,
    /// `Σ a_j - n`
    pub trace_gap: f64,
    pub trace_pass: bool,
    /// `max_z |Σ a_j ⟨u_j, z⟩² - 1|` over sampled unit `z`.
    pub isotropy_gap: f64,
    pub isotropy_pass: bool,
    /// Largest `gauge(conv(contacts), x / (n‖x‖))` over sampled `x`;
    /// infinite when the contacts do not surround the origin.
    pub ball_inside_max_gauge: f64,
    pub ball_inside_pass: bool,
    pub residual_identity: f64,
    pub residual_barycenter: f64,
}

impl DecompositionReport {
    pub fn pass(&self) -> bool {
        self.trace_pass && self.isotropy_pass && self.ball_inside_pass
    }
}

/// Audit the identities a decomposition must satisfy, on fixed seeded samples.
pub fn validate_decomposition(d: &JohnDecomposition, tol: f64) -> DecompositionReport {
    let n = d.dim;
    let trace_gap = d.weights.iter().sum::<f64>() - n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    let mut isotropy_gap = 0.0f64;
    let mut directions = Vec::with_capacity(AUDIT_SAMPLES);
    for _ in 0..AUDIT_SAMPLES {
        let z = loop {
            let z = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let norm = z.norm();
            if norm > 1e-12 {
                break z / norm;
            }
        };
        let q: f64 = d
            .contacts
            .iter()
            .zip(&d.weights)
            .map(|(u, a)| a * u.dot(&z).powi(2))
            .sum();
        isotropy_gap = isotropy_gap.max((q - 1.0).abs());
        directions.push(z);
    }

    let ball_inside_max_gauge = match VPolytope::new(n, d.contacts.clone()) {
        Ok(hull) => directions
            .iter()
            .map(|z| {
                hull.gauge_unchecked(&(z / n as f64))
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };

    DecompositionReport {
        tol,
        trace_gap,
        trace_pass: trace_gap.abs() <= tol,
        isotropy_gap,
        isotropy_pass: isotropy_gap <= tol,
        ball_inside_max_gauge,
        ball_inside_pass: ball_inside_max_gauge <= 1.0 + tol,
        residual_identity: d.residual_identity,
        residual_barycenter: d.residual_barycenter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{regular_simplex_directions, unit};

    fn cube_contacts(n: usize) -> Vec<Vector> {
        (0..n).flat_map(|k| [unit(n, k), -unit(n, k)]).collect()
    }

    #[test]
    fn nnls_matches_hand_solution() {
        // min ‖(x1 - 1, x2 + 1)‖ over x ≥ 0 → (1, 0)
        let a = Matrix::identity(2, 2);
        let x = nnls(&a, &Vector::from_vec(vec![1.0, -1.0]));
        assert!((x[0] - 1.0).abs() < 1e-14 && x[1] == 0.0);
    }

    #[test]
    fn cube_weights_are_half() {
        for n in 1..=5 {
            let d = recover_weights(&cube_contacts(n)).unwrap();
            assert_eq!(d.len(), 2 * n);
            assert!(d.weights.iter().all(|a| (a - 0.5).abs() < 1e-12));
            assert!(d.residual_identity <= 1e-12 && d.residual_barycenter <= 1e-12);
        }
    }

    #[test]
    fn simplex_weights() {
        for n in 2..=6 {
            let d = recover_weights(&regular_simplex_directions(n)).unwrap();
            let expected = n as f64 / (n as f64 + 1.0);
            assert!(
                d.weights.iter().all(|a| (a - expected).abs() < 1e-10),
                "{:?}",
                d.weights
            );
            assert!(d.residual_identity < 1e-10);
        }
    }

    #[test]
    fn two_vectors_cannot_span_three_dimensions() {
        let err = recover_weights(&[unit(3, 0), unit(3, 1)]).unwrap_err();
        assert!(matches!(err, Error::NoValidDecomposition { .. }));
    }

    #[test]
    fn validation_report() {
        let d = recover_weights(&cube_contacts(3)).unwrap();
        let r = validate_decomposition(&d, 1e-8);
        assert!(r.pass(), "{r:?}");
        let mut bad = d.clone();
        bad.weights[0] += 0.1;
        let r = validate_decomposition(&bad, 1e-8);
        assert!(!r.trace_pass);
        let s = recover_weights(&regular_simplex_directions(3)).unwrap();
        let r = validate_decomposition(&s, 1e-8);
        assert!(r.ball_inside_pass, "{r:?}");
    }

    #[test]
    fn json_layout() {
        let d = recover_weights(&cube_contacts(1)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(v["dim"], 1);
        assert_eq!(v["contacts"], serde_json::json!([[1.0], [-1.0]]));
        assert!(v["residuals"]["identity"].is_number());
        assert!(v["residuals"]["barycenter"].is_number());
        let back: JohnDecomposition = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
    }
}
