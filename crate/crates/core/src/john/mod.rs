//! Extremal ellipsoids, John and Löwner position, contact points and the
//! weights of the decomposition of the identity they carry.
//!
//! An H-polytope is in John position when its maximum-volume inscribed
//! ellipsoid is the unit ball; a point set is in Löwner position when its
//! minimum-volume enclosing ellipsoid is. Contacts are the unit vectors where
//! the body touches the sphere.

mod mvee;
mod mvie;
mod weights;

pub use mvee::{min_enclosing_ellipsoid, solve_mvee, EnclosingEllipsoid, MveeOptions};
pub use mvie::{max_inscribed_ellipsoid, solve_mvie, InscribedEllipsoid, MvieOptions};
pub use weights::{
    nnls, recover_weights, validate_decomposition, DecompositionReport, JohnDecomposition,
    DECOMPOSITION_TOL, MAX_IDENTITY_RESIDUAL, WEIGHT_FLOOR,
};

use serde::{Deserialize, Serialize};

use crate::convex::{Body, Ellipsoid, HPolytope, VPolytope};
use crate::error::{Error, Result};
use crate::linalg::{serde_vec, sym_eigen, sym_op_norm, sym_sqrt, Matrix, Vector};

/// Default tolerance for `|‖u‖ - 1|` when reading off contact points.
pub const CONTACT_TOL: f64 = 1e-5;
/// Re-solve audit bound on centre offset and shape gap.
pub const POSITION_TOL: f64 = 1e-6;

const CONTACT_DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionMode {
    John,
    Loewner,
}

impl PositionMode {
    pub fn name(self) -> &'static str {
        match self {
            PositionMode::John => "John",
            PositionMode::Loewner => "Loewner",
        }
    }
}

/// `x ↦ linear·x + shift`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    #[serde(with = "serde_vec::matrix")]
    pub linear: Matrix,
    #[serde(with = "serde_vec")]
    pub shift: Vector,
}

impl AffineMap {
    pub fn new(linear: Matrix, shift: Vector) -> Result<Self> {
        let n = shift.len();
        if linear.nrows() != n || linear.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: linear.nrows(),
            });
        }
        if linear.determinant().abs() <= f64::MIN_POSITIVE || linear.clone().try_inverse().is_none()
        {
            return Err(Error::InvalidArgument("affine map is singular".into()));
        }
        Ok(Self { linear, shift })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            linear: Matrix::identity(n, n),
            shift: Vector::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.shift
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = self
            .linear
            .clone()
            .try_inverse()
            .expect("checked invertible");
        let shift = -(&inv * &self.shift);
        AffineMap { linear: inv, shift }
    }

    pub fn apply_inverse(&self, y: &Vector) -> Vector {
        self.inverse().apply(y)
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            linear: &self.linear * &other.linear,
            shift: &self.linear * &other.shift + &self.shift,
        }
    }

    pub fn image_h(&self, p: &HPolytope) -> Result<HPolytope> {
        p.affine_image(&self.linear, &self.shift)
    }

    pub fn image_v(&self, p: &VPolytope) -> Result<VPolytope> {
        VPolytope::new(
            p.dim(),
            p.vertices().iter().map(|v| self.apply(v)).collect(),
        )
    }

    pub fn log_abs_det(&self) -> f64 {
        self.linear.determinant().abs().ln()
    }
}

/// Map an H-polytope to John position: `T(x) = E⁻¹(x - c)` for the
/// inscribed ellipsoid `{c + E s}`.
pub fn normalize_john(p: &HPolytope) -> Result<(AffineMap, HPolytope)> {
    normalize_john_with(p, MvieOptions::default())
}

pub fn normalize_john_with(p: &HPolytope, opts: MvieOptions) -> Result<(AffineMap, HPolytope)> {
    let e = solve_mvie(p, opts)?;
    let inv = sym_eigen(&e.root).map(|v| 1.0 / v);
    let inv = (&inv + inv.transpose()) * 0.5;
    let shift = -(&inv * &e.center);
    let map = AffineMap::new(inv, shift)?;
    let image = map.image_h(p)?;
    Ok((map, image))
}

/// Map a point set to Löwner position: `T(x) = M^{1/2}(x - c)` for the
/// enclosing ellipsoid `(x - c)ᵀ M (x - c) ≤ 1`.
pub fn normalize_loewner(v: &VPolytope) -> Result<(AffineMap, VPolytope)> {
    let e = min_enclosing_ellipsoid(v.vertices())?;
    let root = sym_sqrt(&e.shape);
    let root = (&root + root.transpose()) * 0.5;
    let shift = -(&root * &e.center);
    let map = AffineMap::new(root, shift)?;
    let image = map.image_v(v)?;
    Ok((map, image))
}

/// John position for H-bodies, Löwner position for V-bodies.
pub fn normalize(body: &Body, mode: PositionMode) -> Result<(AffineMap, Body)> {
    match (body, mode) {
        (Body::H(p), PositionMode::John) => normalize_john(p).map(|(m, b)| (m, Body::H(b))),
        (Body::V(p), PositionMode::Loewner) => normalize_loewner(p).map(|(m, b)| (m, Body::V(b))),
        _ => Err(Error::InvalidArgument(format!(
            "{} position needs an {} body",
            mode.name(),
            if mode == PositionMode::John {
                "H-"
            } else {
                "V-"
            }
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionAudit {
    pub mode: PositionMode,
    /// `‖c‖₂` of the re-solved ellipsoid.
    pub center_offset: f64,
    /// `‖shape - Id‖_op` of the re-solved ellipsoid.
    pub shape_gap: f64,
}

impl PositionAudit {
    pub fn within(&self, tol: f64) -> bool {
        self.center_offset <= tol && self.shape_gap <= tol
    }
}

fn audit_ellipsoid(mode: PositionMode, e: &Ellipsoid) -> PositionAudit {
    let n = e.dim();
    PositionAudit {
        mode,
        center_offset: e.center.norm(),
        shape_gap: sym_op_norm(&(&e.shape - Matrix::identity(n, n))),
    }
}

/// Re-solve the extremal ellipsoid and measure its distance from the unit ball.
pub fn audit_position(body: &Body) -> Result<PositionAudit> {
    match body {
        Body::H(p) => Ok(audit_ellipsoid(
            PositionMode::John,
            &max_inscribed_ellipsoid(p)?,
        )),
        Body::V(p) => Ok(audit_ellipsoid(
            PositionMode::Loewner,
            &min_enclosing_ellipsoid(p.vertices())?,
        )),
    }
}

/// `audit_position`, failing with `NotInPosition` beyond `tol`.
pub fn ensure_in_position(body: &Body, tol: f64) -> Result<PositionAudit> {
    let a = audit_position(body)?;
    if !a.within(tol) {
        return Err(Error::NotInPosition {
            mode: a.mode.name(),
            center_offset: a.center_offset,
            shape_gap: a.shape_gap,
        });
    }
    Ok(a)
}

/// Indices (into the body's half-spaces or points) of the distinct contact
/// points, together with the unit contacts.
pub fn contact_indices(body: &Body, tol: f64) -> Result<(Vec<usize>, Vec<Vector>)> {
    let candidates: Vec<(usize, f64, Vector)> = match body {
        Body::H(p) => {
            if !p.origin_is_interior() {
                return Err(Error::OriginNotInterior);
            }
            p.halfspaces()
                .iter()
                .enumerate()
                .map(|(i, h)| (i, h.normal.norm() / h.offset, h.normal.clone()))
                .collect()
        }
        Body::V(p) => p
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, x)| (i, x.norm(), x.clone()))
            .collect(),
    };
    let mut indices = Vec::new();
    let mut contacts: Vec<Vector> = Vec::new();
    for (i, r, v) in candidates {
        if (r - 1.0).abs() > tol {
            continue;
        }
        let u = &v / v.norm();
        if contacts
            .iter()
            .any(|c| (c - &u).amax() <= CONTACT_DEDUP_TOL)
        {
            continue;
        }
        indices.push(i);
        contacts.push(u);
    }
    Ok((indices, contacts))
}

/// Unit contact points of a body in position. At least `n+1` are required
/// (`n` for symmetric bodies); fewer means the positioning was too coarse.
pub fn extract_contacts(body: &Body, tol: f64, symmetric: bool) -> Result<Vec<Vector>> {
    let (_, contacts) = contact_indices(body, tol)?;
    let n = body.dim();
    let needed = if symmetric { n } else { n + 1 };
    if contacts.len() < needed {
        return Err(Error::TooFewContacts {
            found: contacts.len(),
            needed,
        });
    }
    Ok(contacts)
}

/// An H-polytope in John position with its decomposition of the identity.
#[derive(Debug, Clone)]
pub struct JohnPosition {
    pub map: AffineMap,
    pub body: HPolytope,
    pub decomposition: JohnDecomposition,
    /// Half-space index (in the input family) of each decomposition contact.
    pub family_indices: Vec<usize>,
}

/// Position, extract contacts and recover weights in one go.
pub fn john_position(p: &HPolytope, tol: f64) -> Result<JohnPosition> {
    let (map, body) = normalize_john(p)?;
    let wrapped = Body::H(body);
    let (indices, contacts) = contact_indices(&wrapped, tol)?;
    let n = p.dim();
    if contacts.len() < n + 1 {
        return Err(Error::TooFewContacts {
            found: contacts.len(),
            needed: n + 1,
        });
    }
    let decomposition = recover_weights(&contacts)?;
    let family_indices = decomposition.origin.iter().map(|&k| indices[k]).collect();
    let Body::H(body) = wrapped else {
        unreachable!()
    };
    Ok(JohnPosition {
        map,
        body,
        decomposition,
        family_indices,
    })
}

/// The regular simplex `{x : ⟨x, u_j⟩ ≤ 1}` whose inscribed ball is `B_2^n`.
pub fn regular_simplex_in_john_position(n: usize) -> HPolytope {
    HPolytope::from_normals(n, crate::linalg::regular_simplex_directions(n))
        .expect("simplex is well formed")
}
