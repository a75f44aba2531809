//! Certificates for `z + inner ⊆ β (z + outer)`.
//!
//! Both sides are convex, so containment holds iff every vertex `w` of
//! `z + inner` has `gauge_{z + outer}(w) ≤ β`. The gauge of an H-polytope is a
//! max of linear forms, so the check is exact up to round-off.

use serde::{Deserialize, Serialize};

use super::{enumerate_vertices, HPolytope};
use crate::error::{Error, Result};
use crate::linalg::{serde_vec, Vector};

/// Relative slack allowed on `β` before a vertex counts as a violation.
const SCALE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentCertificate {
    pub inner: HPolytope,
    pub outer: HPolytope,
    pub scale: f64,
    #[serde(with = "serde_vec")]
    pub center: Vector,
    pub satisfied: bool,
    /// A vertex of `z + inner` outside `β (z + outer)`.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_vec")]
    pub witness: Option<Vector>,
    /// Largest gauge over the vertices of `z + inner`; the smallest valid `β`.
    pub max_gauge: f64,
}

/// Vertices and gauges of a fixed `(inner, outer, z)` triple, so that many
/// values of `β` can be tested without re-enumerating.
#[derive(Debug, Clone)]
pub struct ContainmentProbe {
    inner: HPolytope,
    outer: HPolytope,
    center: Vector,
    gauges: Vec<f64>,
    vertices: Vec<Vector>,
}

impl ContainmentProbe {
    pub fn new(inner: &HPolytope, outer: &HPolytope, center: &Vector) -> Result<Self> {
        let n = inner.dim();
        if outer.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: outer.dim(),
            });
        }
        if center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        let shifted_outer = outer.translate(center);
        let vertices: Vec<Vector> = enumerate_vertices(inner)?
            .into_vertices()
            .into_iter()
            .map(|w| w + center)
            .collect();
        let gauges = vertices
            .iter()
            .map(|w| shifted_outer.gauge(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            inner: inner.clone(),
            outer: outer.clone(),
            center: center.clone(),
            gauges,
            vertices,
        })
    }

    pub fn max_gauge(&self) -> f64 {
        self.gauges.iter().copied().fold(0.0, f64::max)
    }

    pub fn holds_at(&self, scale: f64) -> bool {
        self.max_gauge() <= scale * (1.0 + SCALE_TOL)
    }

    pub fn certificate(&self, scale: f64) -> ContainmentCertificate {
        let worst =
            (0..self.gauges.len()).max_by(|&a, &b| self.gauges[a].total_cmp(&self.gauges[b]));
        let satisfied = self.holds_at(scale);
        ContainmentCertificate {
            inner: self.inner.clone(),
            outer: self.outer.clone(),
            scale,
            center: self.center.clone(),
            satisfied,
            witness: if satisfied {
                None
            } else {
                worst.map(|k| self.vertices[k].clone())
            },
            max_gauge: self.max_gauge(),
        }
    }
}

/// Decide `z + inner ⊆ β (z + outer)`. `inner` must be bounded and
/// `0 ∈ int(z + outer)`.
pub fn check_containment(
    inner: &HPolytope,
    outer: &HPolytope,
    scale: f64,
    center: &Vector,
) -> Result<ContainmentCertificate> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "containment scale must be positive, got {scale}"
        )));
    }
    Ok(ContainmentProbe::new(inner, outer, center)?.certificate(scale))
}

mod opt_vec {
    use crate::linalg::Vector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vector>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.collect_seq(v.iter()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vector>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(Vector::from_vec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_polytope_inside_cube() {
        let z = Vector::zeros(3);
        let c =
            check_containment(&HPolytope::cross_polytope(3), &HPolytope::cube(3), 1.0, &z).unwrap();
        assert!(c.satisfied);
        assert!(c.witness.is_none());
    }

    #[test]
    fn shrunken_cube_fails_at_a_vertex() {
        let z = Vector::zeros(3);
        let cube = HPolytope::cube(3);
        let c = check_containment(&cube, &cube, 0.9, &z).unwrap();
        assert!(!c.satisfied);
        let w = c.witness.unwrap();
        assert!(w.iter().all(|x| (x.abs() - 1.0).abs() < 1e-12));
        assert!((c.max_gauge - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_inside_scaled_cross_polytope() {
        for n in 2..=4 {
            let z = Vector::zeros(n);
            let c = check_containment(
                &HPolytope::cube(n),
                &HPolytope::cross_polytope(n),
                n as f64,
                &z,
            )
            .unwrap();
            assert!(c.satisfied, "n = {n}");
            let tight = check_containment(
                &HPolytope::cube(n),
                &HPolytope::cross_polytope(n),
                n as f64 - 0.01,
                &z,
            )
            .unwrap();
            assert!(!tight.satisfied);
        }
    }

    #[test]
    fn center_shift() {
        // z + [0,2]^2 ⊆ β(z + [0,2]^2) with z = -(1,1) is the centered cube, β = 1
        let sq = HPolytope::cube(2).translate(&Vector::from_vec(vec![1.0, 1.0]));
        let z = Vector::from_vec(vec![-1.0, -1.0]);
        assert!(check_containment(&sq, &sq, 1.0, &z).unwrap().satisfied);
        assert!(matches!(
            check_containment(&sq, &sq, 1.0, &Vector::zeros(2)),
            Err(Error::OriginNotInterior)
        ));
        let open = HPolytope::cube(2).subfamily(&[0, 1, 2]).unwrap();
        assert_eq!(
            check_containment(&open, &sq, 1.0, &z),
            Err(Error::Unbounded)
        );
    }

    #[test]
    fn certificate_json_round_trip() {
        let z = Vector::zeros(2);
        let c = check_containment(&HPolytope::cube(2), &HPolytope::cube(2), 0.5, &z).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: ContainmentCertificate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
