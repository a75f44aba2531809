use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::convex::{is_bounded, HPolytope, HalfSpace};
use crate::error::{Error, Result};
use crate::john::regular_simplex_in_john_position;
use crate::linalg::{unit, Matrix, Vector};

/// Support directions probed when accepting a strips family.
pub const STRIP_PROBES: usize = 1000;
pub const STRIP_DOUBLINGS: usize = 4;
/// Slack on the outer radius 2 in the strips check.
pub const STRIP_TOL: f64 = 1e-9;
const POLYTOPE_ATTEMPTS: usize = 200;
const ASCENT_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Cube,
    Simplex,
    RandomPolytope,
    RandomStrips,
    AffineImage,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(FamilyKind::Cube),
            "simplex" => Ok(FamilyKind::Simplex),
            "random_polytope" => Ok(FamilyKind::RandomPolytope),
            "random_strips" => Ok(FamilyKind::RandomStrips),
            "affine_image" => Ok(FamilyKind::AffineImage),
            other => Err(Error::InvalidArgument(format!(
                "unknown family kind {other:?}"
            ))),
        }
    }
}

/// `count` is the number of half-spaces (`random_polytope`) or strips
/// (`random_strips`); ignored for `cube` and `simplex`.
///
/// `params` for `affine_image`: `[distortion, shift]` (defaults `0.5, 1.0`),
/// applied to a `base` family (default `random_polytope`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<FamilyKind>,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, n: usize, count: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            count,
            seed,
            params: Vec::new(),
            base: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        let kind = if self.kind == FamilyKind::AffineImage {
            self.base.unwrap_or(FamilyKind::RandomPolytope)
        } else {
            self.kind
        };
        match kind {
            FamilyKind::RandomPolytope if self.count < self.n + 1 => {
                Err(Error::InvalidArgument(format!(
                    "random_polytope needs at least n + 1 = {} half-spaces, got {}",
                    self.n + 1,
                    self.count
                )))
            }
            FamilyKind::RandomStrips if self.count < self.n => {
                Err(Error::InvalidArgument(format!(
                    "random_strips needs at least n = {} strips, got {}",
                    self.n, self.count
                )))
            }
            FamilyKind::AffineImage => Err(Error::InvalidArgument(
                "affine_image cannot be its own base".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// A generated family, both as one list of half-spaces and grouped into
/// bodies (axis strips for the cube, strips for `random_strips`, single
/// half-spaces otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub spec: FamilySpec,
    pub polytope: HPolytope,
    pub bodies: Vec<HPolytope>,
}

pub fn generate_family(spec: &FamilySpec) -> Result<Family> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (bodies, count) = match spec.kind {
        FamilyKind::AffineImage => {
            let base = FamilySpec {
                kind: spec.base.unwrap_or(FamilyKind::RandomPolytope),
                ..spec.clone()
            };
            let inner = generate_family(&base)?;
            let distortion = spec.params.first().copied().unwrap_or(0.5);
            let shift_scale = spec.params.get(1).copied().unwrap_or(1.0);
            let (linear, shift) = random_affine(&mut rng, n, distortion, shift_scale);
            let bodies = inner
                .bodies
                .iter()
                .map(|b| b.affine_image(&linear, &shift))
                .collect::<Result<Vec<_>>>()?;
            (bodies, inner.spec.count)
        }
        kind => base_bodies(kind, n, spec.count, &mut rng)?,
    };
    let polytope = HPolytope::new(
        n,
        bodies
            .iter()
            .flat_map(|b| b.halfspaces().iter().cloned())
            .collect(),
    )?;
    Ok(Family {
        spec: FamilySpec {
            count,
            ..spec.clone()
        },
        polytope,
        bodies,
    })
}

fn base_bodies(
    kind: FamilyKind,
    n: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<HPolytope>, usize)> {
    match kind {
        FamilyKind::Cube => Ok(((0..n).map(|k| strip(unit(n, k))).collect(), 2 * n)),
        FamilyKind::Simplex => {
            let p = regular_simplex_in_john_position(n);
            Ok((singles(&p), n + 1))
        }
        FamilyKind::RandomPolytope => {
            for _ in 0..POLYTOPE_ATTEMPTS {
                let hs: Vec<HalfSpace> = (0..count)
                    .map(|_| HalfSpace::new(random_unit(rng, n), 1.0))
                    .collect();
                let p = HPolytope::new(n, hs)?;
                if is_bounded(&p)? {
                    return Ok((singles(&p), count));
                }
            }
            Err(Error::GenerationFailed(format!(
                "no bounded polytope from {count} tangent half-spaces in dimension {n} after {POLYTOPE_ATTEMPTS} draws"
            )))
        }
        FamilyKind::RandomStrips => {
            let mut c = count;
            for attempt in 0..=STRIP_DOUBLINGS {
                let bodies: Vec<HPolytope> = (0..c).map(|_| strip(random_unit(rng, n))).collect();
                if strips_sandwiched(&bodies, n, rng)? {
                    return Ok((bodies, c));
                }
                if attempt < STRIP_DOUBLINGS {
                    c *= 2;
                }
            }
            Err(Error::GenerationFailed(format!(
                "{c} random strips in dimension {n} do not satisfy B ⊆ ∩ ⊆ 2B"
            )))
        }
        FamilyKind::AffineImage => unreachable!("handled by the caller"),
    }
}

fn singles(p: &HPolytope) -> Vec<HPolytope> {
    p.halfspaces()
        .iter()
        .map(|h| HPolytope::new(p.dim(), vec![h.clone()]).expect("single half-space"))
        .collect()
}

/// `{x : |⟨x, w⟩| ≤ 1}`
pub fn strip(w: Vector) -> HPolytope {
    let n = w.len();
    HPolytope::new(
        n,
        vec![HalfSpace::new(w.clone(), 1.0), HalfSpace::new(-w, 1.0)],
    )
    .expect("strip is well formed")
}

pub fn random_unit(rng: &mut impl Rng, n: usize) -> Vector {
    loop {
        let v = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// `B ⊆ ∩` holds for unit normals. `∩ ⊆ 2B` is probed from seeded directions
/// (plus the coordinate axes): each probe re-aims at its support point until
/// the norm stops growing, a local ascent of `‖x‖` over the vertices.
fn strips_sandwiched(bodies: &[HPolytope], n: usize, rng: &mut ChaCha8Rng) -> Result<bool> {
    let p = HPolytope::new(
        n,
        bodies
            .iter()
            .flat_map(|b| b.halfspaces().iter().cloned())
            .collect(),
    )?;
    if !is_bounded(&p)? {
        return Ok(false);
    }
    let mut dirs: Vec<Vector> = (0..n).map(|k| unit(n, k)).collect();
    dirs.extend((0..STRIP_PROBES).map(|_| random_unit(rng, n)));
    for d in dirs {
        if probe_radius(&p, d)? > 2.0 + STRIP_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

fn probe_radius(p: &HPolytope, mut d: Vector) -> Result<f64> {
    let mut best = 0.0f64;
    for _ in 0..ASCENT_STEPS {
        let (_, x) = p.support_point(&d)?;
        let r = x.norm();
        if r <= best * (1.0 + 1e-12) {
            break;
        }
        best = r;
        d = x / r;
    }
    Ok(best)
}

fn random_affine(
    rng: &mut ChaCha8Rng,
    n: usize,
    distortion: f64,
    shift_scale: f64,
) -> (Matrix, Vector) {
    loop {
        let g = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        let linear = Matrix::identity(n, n) + g * (distortion / (n as f64).sqrt());
        let shift = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0) * shift_scale);
        if linear.determinant().abs() > 0.05 {
            return (linear, shift);
        }
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed from the experiment seed, dimension and trial index.
pub fn derive_seed(seed: u64, n: usize, trial: usize) -> u64 {
    mix(mix(mix(seed) ^ n as u64) ^ trial as u64)
}
