//! Volume and diameter oracles.
//!
//! Exact volume is a fan over the facets from the Chebyshev center,
//! `vol(P) = Σ_F h(c, F) vol_{n-1}(F) / n`, where each face volume is computed
//! by a pulling (cone-from-a-vertex) recursion on the facet-vertex incidences.
//! Every term is the volume of a simplex in a triangulation of `P`.
//!
//! The Monte Carlo estimator draws i.i.d. uniform points from an LP-computed
//! bounding box and reports the hit fraction, which is unbiased and has an
//! exact binomial standard error.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{chebyshev_center, enumerate_vertices, is_bounded, HPolytope};
use crate::error::{Error, Result};
use crate::linalg::{affine_dimension, distance_to_affine_hull, unit, Vector};

const INCIDENCE_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Zero for exact volumes.
    pub stderr: f64,
}

pub fn volume(p: &HPolytope, mode: VolumeMode) -> Result<VolumeEstimate> {
    match mode {
        VolumeMode::Exact => volume_exact(p).map(|value| VolumeEstimate { value, stderr: 0.0 }),
        VolumeMode::MonteCarlo { samples, seed } => volume_monte_carlo(p, samples, seed),
    }
}

pub fn volume_exact(p: &HPolytope) -> Result<f64> {
    let n = p.dim();
    let (center, radius) = chebyshev_center(p)?;
    let verts = enumerate_vertices(p)?;
    if radius <= 1e-12 {
        return Err(Error::DegenerateBody);
    }
    let vertices = verts.vertices();
    if n == 1 {
        let (lo, hi) = vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v[0]), hi.max(v[0]))
            });
        return Ok(hi - lo);
    }
    let scale = 1.0 + vertices.iter().map(|v| v.amax()).fold(0.0, f64::max);

    let mut facets: Vec<(FixedBitSet, f64)> = Vec::new();
    for h in p.halfspaces() {
        let norm = h.normal.norm();
        let mut set = FixedBitSet::with_capacity(vertices.len());
        for (k, v) in vertices.iter().enumerate() {
            if (h.slack(v) / norm).abs() <= INCIDENCE_TOL * scale {
                set.insert(k);
            }
        }
        let height = -h.slack(&center) / norm;
        if facets.iter().any(|(s, _)| *s == set) {
            continue;
        }
        facets.push((set, height));
    }

    let faces: Vec<FixedBitSet> = facets.iter().map(|(s, _)| s.clone()).collect();
    let mut ctx = FaceVolumes {
        vertices,
        faces: &faces,
        memo: HashMap::new(),
        tol: RANK_TOL * scale,
    };
    let mut total = 0.0;
    for (set, height) in &facets {
        if ctx.affine_dim(set) != n - 1 {
            continue;
        }
        total += height * ctx.volume(set, n - 1) / n as f64;
    }
    Ok(total)
}

struct FaceVolumes<'a> {
    vertices: &'a [Vector],
    faces: &'a [FixedBitSet],
    memo: HashMap<FixedBitSet, f64>,
    tol: f64,
}

impl FaceVolumes<'_> {
    fn points(&self, set: &FixedBitSet) -> Vec<&Vector> {
        set.ones().map(|k| &self.vertices[k]).collect()
    }

    fn affine_dim(&self, set: &FixedBitSet) -> usize {
        affine_dimension(&self.points(set), self.tol)
    }

    /// `k`-dimensional volume of the face with vertex set `set`.
    fn volume(&mut self, set: &FixedBitSet, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if let Some(&v) = self.memo.get(set) {
            return v;
        }
        let pts = self.points(set);
        let value = if k == 1 {
            // an edge: its two extreme points are the farthest pair
            let mut best = 0.0f64;
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    best = best.max((pts[i] - pts[j]).norm());
                }
            }
            best
        } else {
            let apex_index = set.ones().next().expect("non-empty face");
            let apex = self.vertices[apex_index].clone();
            let mut subfaces: Vec<FixedBitSet> = Vec::new();
            for f in self.faces {
                let mut g = set.clone();
                g.intersect_with(f);
                if g.contains(apex_index) || g == *set || subfaces.contains(&g) {
                    continue;
                }
                if g.count_ones(..) < k {
                    continue;
                }
                if self.affine_dim(&g) == k - 1 {
                    subfaces.push(g);
                }
            }
            let mut sum = 0.0;
            for g in subfaces {
                let gp = self.points(&g);
                let h = distance_to_affine_hull(&apex, &gp, self.tol);
                sum += h * self.volume(&g, k - 1) / k as f64;
            }
            sum
        };
        self.memo.insert(set.clone(), value);
        value
    }
}

/// Axis-aligned bounding box by `2n` support LPs.
pub fn bounding_box(p: &HPolytope) -> Result<(Vector, Vector)> {
    let n = p.dim();
    let mut lo = Vector::zeros(n);
    let mut hi = Vector::zeros(n);
    for k in 0..n {
        hi[k] = p.support(&unit(n, k))?;
        lo[k] = -p.support(&(-unit(n, k)))?;
    }
    Ok((lo, hi))
}

pub fn volume_monte_carlo(p: &HPolytope, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "Monte Carlo volume needs at least one sample".into(),
        ));
    }
    if !is_bounded(p)? {
        return Err(Error::Unbounded);
    }
    let (lo, hi) = bounding_box(p)?;
    let n = p.dim();
    let box_volume: f64 = (0..n).map(|k| hi[k] - lo[k]).product();
    if box_volume <= 0.0 {
        return Err(Error::DegenerateBody);
    }
    let (a, b) = p.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vector::zeros(n);
    let mut hits = 0usize;
    for _ in 0..samples {
        for k in 0..n {
            x[k] = rng.random_range(lo[k]..=hi[k]);
        }
        let inside = (0..a.nrows()).all(|i| a.row(i).transpose().dot(&x) <= b[i]);
        if inside {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        value: box_volume * frac,
        stderr: box_volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
    })
}

/// Largest distance between two vertices.
pub fn diameter(p: &HPolytope) -> Result<f64> {
    let verts = enumerate_vertices(p)?;
    let v = verts.vertices();
    let mut best = 0.0f64;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            best = best.max((&v[i] - &v[j]).norm());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::HalfSpace;

    #[test]
    fn cube_and_simplex_volumes() {
        assert!((volume_exact(&HPolytope::cube(3)).unwrap() - 8.0).abs() < 1e-12);
        assert!(
            (volume_exact(&HPolytope::standard_simplex(4)).unwrap() - 1.0 / 24.0).abs() < 1e-14
        );
        assert!((volume_exact(&HPolytope::cube(1)).unwrap() - 2.0).abs() < 1e-15);
        for n in 2..=5 {
            // cross-polytope has volume 2^n / n!
            let expected = 2f64.powi(n as i32) / (1..=n).product::<usize>() as f64;
            let got = volume_exact(&HPolytope::cross_polytope(n)).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "n = {n}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn volume_errors() {
        let five = HPolytope::cube(3).subfamily(&[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(volume_exact(&five), Err(Error::Unbounded));
        let flat = HPolytope::new(
            2,
            vec![
                HalfSpace::from_slice(&[1.0, 0.0], 1.0),
                HalfSpace::from_slice(&[-1.0, 0.0], 1.0),
                HalfSpace::from_slice(&[0.0, 1.0], 0.0),
                HalfSpace::from_slice(&[0.0, -1.0], 0.0),
            ],
        )
        .unwrap();
        assert_eq!(volume_exact(&flat), Err(Error::DegenerateBody));
    }

    #[test]
    fn monte_carlo_cube_agrees_with_exact() {
        let p = HPolytope::cube(3);
        let est = volume_monte_carlo(&p, 1_000_000, 11).unwrap();
        assert!(
            (est.value - 8.0).abs() <= 3.0 * est.stderr.max(1e-12),
            "{est:?}"
        );
        let tri = HPolytope::standard_simplex(2);
        let est = volume_monte_carlo(&tri, 200_000, 3).unwrap();
        assert!((est.value - 0.5).abs() <= 3.0 * est.stderr, "{est:?}");
        assert!(est.stderr > 0.0);
    }

    #[test]
    fn diameters() {
        for n in 1..=5 {
            let d = diameter(&HPolytope::cube(n)).unwrap();
            assert!((d - 2.0 * (n as f64).sqrt()).abs() < 1e-12);
        }
        let segment = HPolytope::new(
            1,
            vec![
                HalfSpace::from_slice(&[1.0], 1.0),
                HalfSpace::from_slice(&[-1.0], 0.0),
            ],
        )
        .unwrap();
        assert!((diameter(&segment).unwrap() - 1.0).abs() < 1e-15);
        assert!((diameter(&HPolytope::cross_polytope(3)).unwrap() - 2.0).abs() < 1e-12);
    }
}
