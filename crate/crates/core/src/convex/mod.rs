//! Polytopes in H- and V-representation and the primitives the selection
//! pipelines are built from: polarity, gauges, boundedness, vertex
//! enumeration, volume, diameter and containment certificates.

mod containment;
mod vertices;
mod volume;

pub use containment::{check_containment, ContainmentCertificate, ContainmentProbe};
pub use vertices::{enumerate_vertices, enumerate_vertices_with_cap, DEFAULT_MAX_DIM};
pub use volume::{
    bounding_box, diameter, volume, volume_exact, volume_monte_carlo, VolumeEstimate, VolumeMode,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{serde_vec, unit, Matrix, Vector};
use crate::lp::{self, LpOutcome, Support};

/// Absolute tolerance for "this constraint is tight".
pub const TIGHT_TOL: f64 = 1e-9;

/// Closed half-space `{x : ⟨x, normal⟩ ≤ offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    #[serde(with = "serde_vec")]
    pub normal: Vector,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn from_slice(normal: &[f64], offset: f64) -> Self {
        Self::new(Vector::from_column_slice(normal), offset)
    }

    /// `⟨x, normal⟩ - offset`
    pub fn slack(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }

    /// The same half-space written with offset 1. Requires `offset > 0`.
    pub fn unit_offset(&self) -> Result<HalfSpace> {
        if self.offset <= 0.0 {
            return Err(Error::OriginNotInterior);
        }
        Ok(HalfSpace::new(&self.normal / self.offset, 1.0))
    }
}

#[derive(Deserialize)]
struct RawHPolytope {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
}

/// Intersection of finitely many half-spaces. Index order is stable: selection
/// results refer to half-spaces by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHPolytope")]
pub struct HPolytope {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
}

impl TryFrom<RawHPolytope> for HPolytope {
    type Error = Error;
    fn try_from(raw: RawHPolytope) -> Result<Self> {
        HPolytope::new(raw.dim, raw.halfspaces)
    }
}

impl HPolytope {
    pub fn new(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        for h in &halfspaces {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.normal.len(),
                });
            }
            if h.normal.norm() == 0.0
                || !h.normal.iter().all(|v| v.is_finite())
                || !h.offset.is_finite()
            {
                return Err(Error::InvalidArgument(
                    "half-space normals must be finite and nonzero".into(),
                ));
            }
        }
        Ok(Self { dim, halfspaces })
    }

    /// `{x : ⟨x, v⟩ ≤ 1}` for every `v`.
    pub fn from_normals(dim: usize, normals: impl IntoIterator<Item = Vector>) -> Result<Self> {
        Self::new(
            dim,
            normals
                .into_iter()
                .map(|v| HalfSpace::new(v, 1.0))
                .collect(),
        )
    }

    /// `[-1, 1]^n`
    pub fn cube(n: usize) -> Self {
        let hs = (0..n)
            .flat_map(|k| {
                [
                    HalfSpace::new(unit(n, k), 1.0),
                    HalfSpace::new(-unit(n, k), 1.0),
                ]
            })
            .collect();
        Self::new(n, hs).expect("cube is well formed")
    }

    /// `{x : x_i ≥ 0, Σ x_i ≤ 1}`
    pub fn standard_simplex(n: usize) -> Self {
        let mut hs: Vec<HalfSpace> = (0..n).map(|k| HalfSpace::new(-unit(n, k), 0.0)).collect();
        hs.push(HalfSpace::new(Vector::from_element(n, 1.0), 1.0));
        Self::new(n, hs).expect("simplex is well formed")
    }

    /// The cross-polytope `conv{±e_i}` written as its `2^n` facets `⟨x, s⟩ ≤ 1`, `s ∈ {±1}^n`.
    pub fn cross_polytope(n: usize) -> Self {
        let hs = (0..1usize << n)
            .map(|mask| {
                let s = Vector::from_fn(n, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
                HalfSpace::new(s, 1.0)
            })
            .collect();
        Self::new(n, hs).expect("cross-polytope is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    /// Constraint matrix `A` (one row per half-space) and offsets `b`.
    pub fn matrix(&self) -> (Matrix, Vec<f64>) {
        let a = Matrix::from_fn(self.len(), self.dim, |i, j| self.halfspaces[i].normal[j]);
        let b = self.halfspaces.iter().map(|h| h.offset).collect();
        (a, b)
    }

    /// Sub-polytope made of the listed half-spaces (in the given order).
    pub fn subfamily(&self, indices: &[usize]) -> Result<HPolytope> {
        let mut hs = Vec::with_capacity(indices.len());
        for &i in indices {
            let h = self.halfspaces.get(i).ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            })?;
            hs.push(h.clone());
        }
        HPolytope::new(self.dim, hs)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.slack(x) <= tol)
    }

    /// `P + z`
    pub fn translate(&self, z: &Vector) -> HPolytope {
        let hs = self
            .halfspaces
            .iter()
            .map(|h| HalfSpace::new(h.normal.clone(), h.offset + h.normal.dot(z)))
            .collect();
        HPolytope {
            dim: self.dim,
            halfspaces: hs,
        }
    }

    /// `t·P` for `t > 0`.
    pub fn scale(&self, t: f64) -> HPolytope {
        assert!(t > 0.0, "scale factor must be positive");
        let hs = self
            .halfspaces
            .iter()
            .map(|h| HalfSpace::new(h.normal.clone(), h.offset * t))
            .collect();
        HPolytope {
            dim: self.dim,
            halfspaces: hs,
        }
    }

    /// Image `{L x + shift : x ∈ P}` under an invertible linear part `L`.
    pub fn affine_image(&self, linear: &Matrix, shift: &Vector) -> Result<HPolytope> {
        let inv_t = linear
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("singular linear map".into()))?
            .transpose();
        let hs = self
            .halfspaces
            .iter()
            .map(|h| {
                let n = &inv_t * &h.normal;
                let off = h.offset + n.dot(shift);
                HalfSpace::new(n, off)
            })
            .collect();
        HPolytope::new(self.dim, hs)
    }

    /// Rescale every half-space to offset 1 (requires `0 ∈ int P`).
    pub fn with_unit_offsets(&self) -> Result<HPolytope> {
        let hs = self
            .halfspaces
            .iter()
            .map(HalfSpace::unit_offset)
            .collect::<Result<_>>()?;
        Ok(HPolytope {
            dim: self.dim,
            halfspaces: hs,
        })
    }

    pub fn origin_is_interior(&self) -> bool {
        self.halfspaces.iter().all(|h| h.offset > 0.0)
    }

    /// `max ⟨d, x⟩` over the polytope.
    pub fn support(&self, d: &Vector) -> Result<f64> {
        self.support_point(d).map(|(v, _)| v)
    }

    /// Maximum of `⟨d, x⟩` and a maximizer.
    pub fn support_point(&self, d: &Vector) -> Result<(f64, Vector)> {
        let (a, b) = self.matrix();
        match lp::maximize(&a, &b, d) {
            Support::Finite { value, point } => Ok((value, point)),
            Support::Empty => Err(Error::InfeasibleBody),
            Support::UnboundedOrEmpty => {
                chebyshev_center(self)?;
                Err(Error::Unbounded)
            }
        }
    }

    /// Indices of a subfamily with the same intersection and no redundant
    /// member. Redundancy is tested one half-space at a time against the
    /// survivors, so exact duplicates keep their last copy.
    pub fn irredundant_indices(&self) -> Result<Vec<usize>> {
        let mut alive = vec![true; self.len()];
        for i in 0..self.len() {
            let others: Vec<usize> = (0..self.len()).filter(|&j| j != i && alive[j]).collect();
            let mut sub = self.subfamily(&others)?;
            // cap the probe so the LP stays bounded
            let h = &self.halfspaces[i];
            sub.halfspaces
                .push(HalfSpace::new(h.normal.clone(), h.offset + 1.0));
            let (v, _) = sub.support_point(&h.normal)?;
            if v <= h.offset + TIGHT_TOL * (1.0 + h.offset.abs()) {
                alive[i] = false;
            }
        }
        Ok((0..self.len()).filter(|&i| alive[i]).collect())
    }

    /// Polar body `conv{v_i / c_i}`; requires `0 ∈ int P`.
    pub fn polar(&self) -> Result<VPolytope> {
        if !self.origin_is_interior() {
            return Err(Error::OriginNotInterior);
        }
        let verts = self
            .halfspaces
            .iter()
            .map(|h| &h.normal / h.offset)
            .collect();
        VPolytope::new(self.dim, verts)
    }

    /// Minkowski functional `p_P(x) = max(0, max_i ⟨x, v_i⟩ / c_i)`.
    pub fn gauge(&self, x: &Vector) -> Result<f64> {
        if !self.origin_is_interior() {
            return Err(Error::OriginNotInterior);
        }
        Ok(self
            .halfspaces
            .iter()
            .map(|h| h.normal.dot(x) / h.offset)
            .fold(0.0, f64::max))
    }
}

/// Center and radius of the largest Euclidean ball inside `P`.
///
/// Errors with `InfeasibleBody` when `P` is empty. A radius of (numerically)
/// zero means the body is lower-dimensional; the radius is capped at `1e9`.
pub fn chebyshev_center(p: &HPolytope) -> Result<(Vector, f64)> {
    const RADIUS_CAP: f64 = 1e9;
    let n = p.dim();
    let m = p.len();
    let a = Matrix::from_fn(m + 1, n + 1, |i, j| {
        if i == m {
            if j == n {
                1.0
            } else {
                0.0
            }
        } else if j == n {
            p.halfspaces[i].normal.norm()
        } else {
            p.halfspaces[i].normal[j]
        }
    });
    let mut b: Vec<f64> = p.halfspaces.iter().map(|h| h.offset).collect();
    b.push(RADIUS_CAP);
    match lp::maximize(&a, &b, &unit(n + 1, n)) {
        Support::Finite { value, point } => {
            if value < -TIGHT_TOL {
                Err(Error::InfeasibleBody)
            } else {
                Ok((point.rows(0, n).into_owned(), value.max(0.0)))
            }
        }
        _ => Err(Error::SolverFailed("Chebyshev-center LP".into())),
    }
}

/// True iff `max ⟨d, x⟩` is finite for every direction `d`.
pub fn is_bounded(p: &HPolytope) -> Result<bool> {
    chebyshev_center(p)?;
    let (a, b) = p.matrix();
    let n = p.dim();
    for k in 0..n {
        for sign in [1.0, -1.0] {
            match lp::maximize(&a, &b, &(unit(n, k) * sign)) {
                Support::Finite { .. } => {}
                Support::UnboundedOrEmpty => return Ok(false),
                Support::Empty => return Err(Error::InfeasibleBody),
            }
        }
    }
    Ok(true)
}

#[derive(Deserialize)]
struct RawVPolytope {
    dim: usize,
    #[serde(with = "serde_vec::list")]
    vertices: Vec<Vector>,
}

/// Convex hull of a finite point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVPolytope")]
pub struct VPolytope {
    dim: usize,
    #[serde(with = "serde_vec::list")]
    vertices: Vec<Vector>,
}

impl TryFrom<RawVPolytope> for VPolytope {
    type Error = Error;
    fn try_from(raw: RawVPolytope) -> Result<Self> {
        VPolytope::new(raw.dim, raw.vertices)
    }
}

impl VPolytope {
    pub fn new(dim: usize, vertices: Vec<Vector>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if vertices.is_empty() {
            return Err(Error::InvalidArgument("vertex list is empty".into()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        Ok(Self { dim, vertices })
    }

    /// `conv{±e_i}`
    pub fn cross_polytope(n: usize) -> Self {
        let verts = (0..n).flat_map(|k| [unit(n, k), -unit(n, k)]).collect();
        Self::new(n, verts).expect("cross-polytope is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Vector> {
        self.vertices
    }

    fn generator_matrix(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.vertices.len(), |i, j| self.vertices[j][i])
    }

    /// `min λ` with `x ∈ λ·conv(V)`, or `None` when `x` is outside the cone
    /// spanned by the vertices (the gauge is infinite there).
    fn raw_gauge(&self, x: &Vector) -> Option<f64> {
        let e = self.generator_matrix();
        let cost = vec![1.0; self.vertices.len()];
        match lp::solve_standard(&e, x.as_slice(), &cost) {
            LpOutcome::Optimal(sol) => Some(sol.value.max(0.0)),
            _ => None,
        }
    }

    /// `0 ∈ int conv(V)`, decided by checking that every `±e_k` lies in the
    /// cone generated by the vertices.
    pub fn origin_is_interior(&self) -> bool {
        let n = self.dim;
        (0..n).all(|k| {
            [1.0, -1.0]
                .iter()
                .all(|s| self.raw_gauge(&(unit(n, k) * *s)).is_some())
        })
    }

    /// Minkowski functional of `conv(V)` by linear programming.
    pub fn gauge(&self, x: &Vector) -> Result<f64> {
        if !self.origin_is_interior() {
            return Err(Error::OriginNotInterior);
        }
        self.gauge_unchecked(x)
    }

    /// Gauge without the interior-origin precheck. Still errors if `x` is
    /// outside the generated cone.
    pub fn gauge_unchecked(&self, x: &Vector) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.raw_gauge(x).ok_or(Error::OriginNotInterior)
    }

    /// Polar body `{x : ⟨x, v⟩ ≤ 1 for all vertices v}`.
    pub fn polar(&self) -> Result<HPolytope> {
        if !self.origin_is_interior() {
            return Err(Error::OriginNotInterior);
        }
        HPolytope::from_normals(self.dim, self.vertices.iter().cloned())
    }

    /// Indices of the points that are extreme (not in the hull of the rest).
    pub fn extreme_indices(&self) -> Vec<usize> {
        let m = self.vertices.len();
        (0..m)
            .filter(|&k| {
                let others: Vec<&Vector> = (0..m)
                    .filter(|&j| {
                        j != k && (&self.vertices[j] - &self.vertices[k]).norm() > TIGHT_TOL
                    })
                    .map(|j| &self.vertices[j])
                    .collect();
                // keep the first of a group of duplicates
                let dup_before =
                    (0..k).any(|j| (&self.vertices[j] - &self.vertices[k]).norm() <= TIGHT_TOL);
                if dup_before {
                    return false;
                }
                if others.is_empty() {
                    return true;
                }
                let e = Matrix::from_fn(self.dim + 1, others.len(), |i, j| {
                    if i == self.dim {
                        1.0
                    } else {
                        others[j][i]
                    }
                });
                let mut f: Vec<f64> = self.vertices[k].iter().copied().collect();
                f.push(1.0);
                !matches!(
                    lp::solve_standard(&e, &f, &vec![0.0; others.len()]),
                    LpOutcome::Optimal(_)
                )
            })
            .collect()
    }

    /// Same hull with non-extreme and duplicate points removed.
    pub fn pruned(&self) -> VPolytope {
        let keep = self.extreme_indices();
        VPolytope {
            dim: self.dim,
            vertices: keep.into_iter().map(|k| self.vertices[k].clone()).collect(),
        }
    }
}

/// Either representation, for operations defined on both.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    H(HPolytope),
    V(VPolytope),
}

impl Body {
    pub fn dim(&self) -> usize {
        match self {
            Body::H(p) => p.dim(),
            Body::V(p) => p.dim(),
        }
    }

    /// Polar body in the dual representation.
    pub fn polar_dual(&self) -> Result<Body> {
        match self {
            Body::H(p) => p.polar().map(Body::V),
            Body::V(p) => p.polar().map(Body::H),
        }
    }

    pub fn gauge(&self, x: &Vector) -> Result<f64> {
        match self {
            Body::H(p) => p.gauge(x),
            Body::V(p) => p.gauge(x),
        }
    }
}

/// Solid ellipsoid `{x : (x - center)ᵀ shape (x - center) ≤ 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    #[serde(with = "serde_vec")]
    pub center: Vector,
    #[serde(with = "serde_vec::matrix")]
    pub shape: Matrix,
}

impl Ellipsoid {
    pub fn new(center: Vector, shape: Matrix) -> Result<Self> {
        let n = center.len();
        if shape.nrows() != n || shape.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: shape.nrows(),
            });
        }
        let asym = (&shape - shape.transpose()).norm();
        if asym > 1e-10 * shape.norm().max(1.0) {
            return Err(Error::InvalidArgument(
                "ellipsoid shape is not symmetric".into(),
            ));
        }
        let shape = (&shape + shape.transpose()) * 0.5;
        if crate::linalg::sym_eigen(&shape).min() <= 0.0 {
            return Err(Error::InvalidArgument(
                "ellipsoid shape is not positive definite".into(),
            ));
        }
        Ok(Self { center, shape })
    }

    pub fn unit_ball(n: usize) -> Self {
        Self {
            center: Vector::zeros(n),
            shape: Matrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `log vol(E) - log vol(B_2^n) = -½ log det(shape)`.
    pub fn log_volume_ratio(&self) -> f64 {
        -0.5 * crate::linalg::sym_eigen(&self.shape)
            .values
            .iter()
            .map(|v| v.ln())
            .sum::<f64>()
    }

    /// `max ⟨d, x⟩` over the ellipsoid.
    pub fn support(&self, d: &Vector) -> f64 {
        let inv = crate::linalg::sym_inverse(&self.shape).expect("shape is positive definite");
        self.center.dot(d) + d.dot(&(&inv * d)).max(0.0).sqrt()
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        let y = x - &self.center;
        y.dot(&(&self.shape * &y)) <= 1.0 + tol
    }
}
