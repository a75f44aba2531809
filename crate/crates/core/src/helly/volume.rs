use serde::{Deserialize, Serialize};

use super::{
    caratheodory_reduce, check_delta, volume_ratio, Pipeline, SelectionOptions, SelectionResult,
};
use crate::convex::HPolytope;
use crate::error::{Error, Result};
use crate::john::{john_position, JohnDecomposition, JohnPosition};
use crate::linalg::{outer, serde_vec, sym_eigen, sym_inverse, sym_op_norm, Matrix, Vector};
use crate::sparsify::{centroid_bound, epsilon_schedule, sparsify, Schedule, SparseDecomposition};

const SANDWICH_SLACK: f64 = 1e-12;

/// Volume pipeline: sparsify the John decomposition of `P = ∩ family`, add a
/// Carathéodory set for the rescaled centroid, and keep those half-spaces.
pub fn select_volume_subfamily(
    family: &HPolytope,
    delta: f64,
    opts: &SelectionOptions,
) -> Result<SelectionResult> {
    check_delta(delta)?;
    let n = family.dim();
    let jp = john_position(family, opts.contact_tol)?;
    let d = &jp.decomposition;
    let epsilon = epsilon_schedule(n, delta, Schedule::Volume);
    let budget = opts.budget(n, epsilon);
    let sparse = sparsify(d, epsilon, budget, opts.strategy, opts.seed)?;
    let tau = centroid_caratheodory(d, &sparse, epsilon)?;
    let mut contacts: Vec<usize> = sparse.sigma.iter().chain(&tau).copied().collect();
    contacts.sort_unstable();
    contacts.dedup();
    let mut indices: Vec<usize> = contacts.iter().map(|&j| jp.family_indices[j]).collect();
    indices.sort_unstable();
    indices.dedup();
    let mut result = finish(
        family,
        Pipeline::Volume,
        delta,
        indices,
        budget + n + 1,
        &jp,
        opts,
    )?;
    result.epsilon = Some(epsilon);
    result.budget = Some(budget);
    result.strategy = Some(opts.strategy);
    result.sigma_size = sparse.sigma.len();
    result.tau_size = tau.len();
    Ok(result)
}

/// `τ` with `w = 3u/(2√n ε) ∈ conv{u_j : j ∈ τ}`, where `u = -ū`.
pub(super) fn centroid_caratheodory(
    d: &JohnDecomposition,
    sparse: &SparseDecomposition,
    epsilon: f64,
) -> Result<Vec<usize>> {
    let n = d.dim as f64;
    let u = -&sparse.centroid;
    let w = &u * (3.0 / (2.0 * n.sqrt() * epsilon));
    if w.norm() > (1.0 / n) * (1.0 + 1e-9)
        || u.norm() > centroid_bound(d.dim, epsilon) * (1.0 + 1e-9)
    {
        return Err(Error::SolverFailed(format!(
            "rescaled centroid has norm {} above 1/n = {}",
            w.norm(),
            1.0 / n
        )));
    }
    Ok(caratheodory_reduce(&d.contacts, &w)?.0)
}

/// All contact half-spaces of the John position.
pub fn select_contact_subfamily(
    family: &HPolytope,
    opts: &SelectionOptions,
) -> Result<SelectionResult> {
    let n = family.dim();
    let jp = john_position(family, opts.contact_tol)?;
    let mut indices = jp.family_indices.clone();
    indices.sort_unstable();
    indices.dedup();
    finish(
        family,
        Pipeline::Contact,
        2.0,
        indices,
        n * (n + 3) / 2,
        &jp,
        opts,
    )
}

fn finish(
    family: &HPolytope,
    pipeline: Pipeline,
    delta: f64,
    indices: Vec<usize>,
    cap: usize,
    jp: &JohnPosition,
    opts: &SelectionOptions,
) -> Result<SelectionResult> {
    let n = family.dim();
    let q = family.subfamily(&indices)?;
    let ratio = volume_ratio(&q, family, &opts.oracle)?;
    let exponent = pipeline.bound_exponent(delta);
    let nd = (n as f64).powf(delta);
    let s = indices.len();
    Ok(SelectionResult {
        pipeline,
        dim: n,
        delta,
        s,
        indices,
        admissible_cap: cap,
        alpha_cap: cap as f64 / nd,
        alpha_implied: s as f64 / nd,
        z: Vector::zeros(n),
        achieved: ratio.value,
        stderr: ratio.stderr,
        oracle_mode: ratio.mode,
        bound_exponent: exponent,
        bound: (n as f64).powf(exponent),
        epsilon: None,
        budget: None,
        strategy: None,
        sigma_size: 0,
        tau_size: 0,
        contacts: jp.decomposition.len(),
        residual_identity: jp.decomposition.residual_identity,
        residual_barycenter: jp.decomposition.residual_barycenter,
        certified: None,
    })
}

/// Exponents `k_j = b_j ⟨A⁻¹ v_j, v_j⟩` for the lifted vectors
/// `v_j = √(n/(n+1)) (-u_j, 1/√n)`, `b_j = (n+1)/|σ|`, one per element of `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BLExponents {
    pub k: Vec<f64>,
    pub b: f64,
    /// `(1+2ε)/(1-2ε)`
    pub gamma: f64,
    pub sum_k: f64,
    pub epsilon: f64,
    /// Extreme eigenvalues of `A = Σ b_j v_j ⊗ v_j`.
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl BLExponents {
    /// `1/(1-2ε)`, the cap on `k_j / b_j`.
    pub fn ratio_cap(&self) -> f64 {
        1.0 / (1.0 - 2.0 * self.epsilon)
    }
}

fn lifted_vectors(s: &SparseDecomposition, source: &JohnDecomposition) -> Result<Vec<Vector>> {
    let n = source.dim;
    if s.dim != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.dim,
        });
    }
    if s.sigma.is_empty() {
        return Err(Error::InvalidArgument("empty multiset".into()));
    }
    let nf = n as f64;
    let scale = (nf / (nf + 1.0)).sqrt();
    s.sigma
        .iter()
        .map(|&j| {
            let u = source.contacts.get(j).ok_or(Error::IndexOutOfRange {
                index: j,
                len: source.contacts.len(),
            })?;
            Ok((-u).insert_row(n, 1.0 / nf.sqrt()) * scale)
        })
        .collect()
}

pub fn bl_exponents(s: &SparseDecomposition, source: &JohnDecomposition) -> Result<BLExponents> {
    let eps = s.epsilon_target;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "exponent audit needs epsilon in (0, 1/2), got {eps}"
        )));
    }
    let n = source.dim;
    let vs = lifted_vectors(s, source)?;
    let b = (n + 1) as f64 / vs.len() as f64;
    let a = vs
        .iter()
        .fold(Matrix::zeros(n + 1, n + 1), |acc, v| acc + outer(v, v) * b);
    let e = sym_eigen(&a);
    let (lmin, lmax) = (e.min(), e.max());
    if lmin < 1.0 - 2.0 * eps - SANDWICH_SLACK || lmax > 1.0 + 2.0 * eps + SANDWICH_SLACK {
        return Err(Error::SandwichViolated {
            lambda_min: lmin,
            lambda_max: lmax,
        });
    }
    let inv =
        sym_inverse(&a).ok_or_else(|| Error::SolverFailed("singular lifted matrix".into()))?;
    let k: Vec<f64> = vs.iter().map(|v| b * (&inv * v).dot(v)).collect();
    Ok(BLExponents {
        sum_k: k.iter().sum(),
        k,
        b,
        gamma: (1.0 + 2.0 * eps) / (1.0 - 2.0 * eps),
        epsilon: eps,
        lambda_min: lmin,
        lambda_max: lmax,
    })
}

/// The lifted operators behind the exponent audit, with `u = -ū`:
/// `A = Σ b_j v_j ⊗ v_j`, the block matrix
/// `T = [[-n u⊗u, -√n u], [-√n uᵀ, 0]]`, and the centred sum
/// `Σ b_j (v_j+v) ⊗ (v_j+v) = A + T` with `v = -√(n/(n+1)) (u, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedOperators {
    #[serde(with = "serde_vec::matrix")]
    pub a: Matrix,
    #[serde(with = "serde_vec::matrix")]
    pub t: Matrix,
    #[serde(with = "serde_vec::matrix")]
    pub centered: Matrix,
    pub t_norm: f64,
    /// `n‖u‖² + √n‖u‖`
    pub t_bound: f64,
    pub centered_min: f64,
    pub centered_max: f64,
}

pub fn lifted_operators(
    s: &SparseDecomposition,
    source: &JohnDecomposition,
) -> Result<LiftedOperators> {
    let n = source.dim;
    let nf = n as f64;
    let vs = lifted_vectors(s, source)?;
    let b = (n + 1) as f64 / vs.len() as f64;
    let a = vs
        .iter()
        .fold(Matrix::zeros(n + 1, n + 1), |acc, v| acc + outer(v, v) * b);
    let mean = s
        .sigma
        .iter()
        .fold(Vector::zeros(n), |acc, &j| acc + &source.contacts[j])
        / s.sigma.len() as f64;
    let u = -mean;
    let shift = u.clone().insert_row(n, 0.0) * (-(nf / (nf + 1.0)).sqrt());
    let centered = vs.iter().fold(Matrix::zeros(n + 1, n + 1), |acc, v| {
        let c = v + &shift;
        acc + outer(&c, &c) * b
    });
    let mut t = Matrix::zeros(n + 1, n + 1);
    t.view_mut((0, 0), (n, n)).copy_from(&(outer(&u, &u) * -nf));
    for i in 0..n {
        t[(i, n)] = -nf.sqrt() * u[i];
        t[(n, i)] = -nf.sqrt() * u[i];
    }
    let e = sym_eigen(&centered);
    let un = u.norm();
    Ok(LiftedOperators {
        t_norm: sym_op_norm(&t),
        t_bound: nf * un * un + nf.sqrt() * un,
        centered_min: e.min(),
        centered_max: e.max(),
        a,
        t,
        centered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::HalfSpace;
    use crate::john::recover_weights;
    use crate::linalg::unit;
    use crate::sparsify::{SparseDecomposition, Strategy};

    fn square_decomposition() -> JohnDecomposition {
        recover_weights(&[unit(2, 0), -unit(2, 0), unit(2, 1), -unit(2, 1)]).unwrap()
    }

    fn whole(d: &JohnDecomposition, eps: f64) -> SparseDecomposition {
        SparseDecomposition {
            dim: d.dim,
            source_size: d.len(),
            sigma: (0..d.len()).collect(),
            centroid: Vector::zeros(d.dim),
            epsilon_target: eps,
            epsilon_achieved: 0.0,
            centroid_norm: 0.0,
            budget: d.len(),
            strategy: Strategy::Exhaustive,
        }
    }

    #[test]
    fn exact_square_gives_identity() {
        let d = square_decomposition();
        let bl = bl_exponents(&whole(&d, 0.25), &d).unwrap();
        assert!((bl.lambda_min - 1.0).abs() < 1e-12 && (bl.lambda_max - 1.0).abs() < 1e-12);
        for k in &bl.k {
            assert!((k - 0.75).abs() < 1e-12);
        }
        assert!((bl.sum_k - 3.0).abs() < 1e-12);
        assert!((bl.gamma - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_multiset_violates_sandwich() {
        let d = square_decomposition();
        let mut s = whole(&d, 0.25);
        s.sigma = vec![0, 1, 0, 1];
        assert!(matches!(
            bl_exponents(&s, &d),
            Err(Error::SandwichViolated { .. })
        ));
    }

    #[test]
    fn lifted_identity_holds() {
        let d = square_decomposition();
        let mut s = whole(&d, 0.25);
        s.sigma = vec![0, 1, 2, 3, 0];
        let ops = lifted_operators(&s, &d).unwrap();
        assert!((&ops.a + &ops.t - &ops.centered).amax() < 1e-12);
        assert!(ops.t_norm <= ops.t_bound + 1e-12);
    }

    #[test]
    fn cube_family_keeps_every_facet() {
        let p = HPolytope::cube(3);
        let r = select_volume_subfamily(&p, 1.0, &SelectionOptions::default()).unwrap();
        r.check(p.len()).unwrap();
        assert_eq!(r.indices, (0..6).collect::<Vec<_>>());
        assert!((r.achieved.unwrap() - 1.0).abs() < 1e-9);
        let c = select_contact_subfamily(&p, &SelectionOptions::default()).unwrap();
        assert_eq!(c.indices, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn redundant_constraints_are_never_selected() {
        let mut hs = HPolytope::cube(3).halfspaces().to_vec();
        for k in 0..10 {
            let t = k as f64;
            let dir = Vector::from_vec(vec![t.cos(), t.sin(), (0.3 * t).cos()]);
            hs.push(HalfSpace::new(&dir / dir.norm() * 0.6, 1.0));
        }
        let p = HPolytope::new(3, hs).unwrap();
        let c = select_contact_subfamily(&p, &SelectionOptions::default()).unwrap();
        assert_eq!(c.indices, (0..6).collect::<Vec<_>>());
        let r = select_volume_subfamily(&p, 1.0, &SelectionOptions::default()).unwrap();
        assert!(r.indices.iter().all(|&i| i < 6));
    }

    #[test]
    fn strip_is_unbounded() {
        let p = HPolytope::new(
            2,
            vec![
                HalfSpace::from_slice(&[1.0, 0.0], 1.0),
                HalfSpace::from_slice(&[-1.0, 0.0], 1.0),
            ],
        )
        .unwrap();
        assert_eq!(
            select_volume_subfamily(&p, 1.0, &SelectionOptions::default()),
            Err(Error::Unbounded)
        );
    }

    #[test]
    fn delta_outside_range() {
        let p = HPolytope::cube(2);
        assert!(matches!(
            select_volume_subfamily(&p, 0.5, &SelectionOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }
}
