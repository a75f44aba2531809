//! Vertex enumeration by the incremental double-description method.
//!
//! The polytope `{x : Ax ≤ b}` is homogenized to the cone
//! `{(x, t) : b t - Ax ≥ 0, t ≥ 0}` in `R^{n+1}`. Starting from the simplicial
//! cone cut out by `n+1` independent rows, rows are added one at a time; new
//! extreme rays come from adjacent pairs straddling the new hyperplane, with
//! adjacency decided combinatorially from the zero sets. Rays with `t > 0` are
//! the vertices; a surviving ray with `t = 0` is a recession direction.

use fixedbitset::FixedBitSet;

use super::{chebyshev_center, HPolytope, VPolytope};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Largest dimension handled by exact vertex enumeration unless overridden.
pub const DEFAULT_MAX_DIM: usize = 8;

const SIGN_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-9;

struct Ray {
    y: Vector,
    zeros: FixedBitSet,
}

/// Extreme points of a bounded H-polytope, `n ≤ DEFAULT_MAX_DIM`.
pub fn enumerate_vertices(p: &HPolytope) -> Result<VPolytope> {
    enumerate_vertices_with_cap(p, DEFAULT_MAX_DIM)
}

pub fn enumerate_vertices_with_cap(p: &HPolytope, max_dim: usize) -> Result<VPolytope> {
    let n = p.dim();
    if n > max_dim {
        return Err(Error::DimensionTooLarge {
            dim: n,
            cap: max_dim,
        });
    }
    // distinguishes "empty" from "unbounded" and guards the DD start
    chebyshev_center(p)?;

    let m = p.len();
    let d = n + 1;
    // row m is t ≥ 0
    let rows: Vec<Vector> = (0..=m)
        .map(|i| {
            if i == m {
                crate::linalg::unit(d, n)
            } else {
                let h = &p.halfspaces()[i];
                let mut r = Vector::zeros(d);
                for j in 0..n {
                    r[j] = -h.normal[j];
                }
                r[n] = h.offset;
                let nr = r.norm();
                r / nr
            }
        })
        .collect();

    let initial = independent_rows(&rows, m, d).ok_or(Error::Unbounded)?;
    let basis = Matrix::from_fn(d, d, |i, j| rows[initial[i]][j]);
    let inv = basis.try_inverse().ok_or(Error::Unbounded)?;

    let mut rays: Vec<Ray> = (0..d)
        .map(|k| {
            let y = inv.column(k).into_owned();
            let y = &y / y.norm();
            let mut zeros = FixedBitSet::with_capacity(m + 1);
            for (i, &row) in initial.iter().enumerate() {
                if i != k {
                    zeros.insert(row);
                }
            }
            Ray { y, zeros }
        })
        .collect();

    for i in (0..=m).filter(|i| !initial.contains(i)) {
        rays = add_row(rays, &rows[i], i, d);
    }

    let mut vertices: Vec<Vector> = Vec::with_capacity(rays.len());
    for ray in &rays {
        let t = ray.y[n];
        if t <= 1e-12 {
            return Err(Error::Unbounded);
        }
        let x = ray.y.rows(0, n) / t;
        if !vertices.iter().any(|v| (v - &x).amax() <= DEDUP_TOL) {
            vertices.push(x);
        }
    }
    if vertices.is_empty() {
        return Err(Error::InfeasibleBody);
    }
    VPolytope::new(n, vertices)
}

/// Greedily pick `d` linearly independent rows, starting with `first`.
fn independent_rows(rows: &[Vector], first: usize, d: usize) -> Option<Vec<usize>> {
    let mut chosen = Vec::with_capacity(d);
    let mut basis: Vec<Vector> = Vec::with_capacity(d);
    let order = std::iter::once(first).chain((0..rows.len()).filter(|&i| i != first));
    for i in order {
        let mut r = rows[i].clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&r);
                r.axpy(-c, b, 1.0);
            }
        }
        let nr = r.norm();
        if nr > 1e-8 {
            basis.push(r / nr);
            chosen.push(i);
            if chosen.len() == d {
                return Some(chosen);
            }
        }
    }
    None
}

fn add_row(rays: Vec<Ray>, row: &Vector, index: usize, d: usize) -> Vec<Ray> {
    let values: Vec<f64> = rays.iter().map(|r| row.dot(&r.y)).collect();
    let plus: Vec<usize> = (0..rays.len()).filter(|&k| values[k] > SIGN_TOL).collect();
    let minus: Vec<usize> = (0..rays.len()).filter(|&k| values[k] < -SIGN_TOL).collect();

    let mut created = Vec::new();
    for &a in &plus {
        for &b in &minus {
            let mut common = rays[a].zeros.clone();
            common.intersect_with(&rays[b].zeros);
            if common.count_ones(..) + 2 < d {
                continue;
            }
            let adjacent = rays
                .iter()
                .enumerate()
                .all(|(k, r)| k == a || k == b || !common.is_subset(&r.zeros));
            if !adjacent {
                continue;
            }
            let y = &rays[b].y * values[a] - &rays[a].y * values[b];
            let norm = y.norm();
            if norm <= f64::MIN_POSITIVE {
                continue;
            }
            let mut zeros = common;
            zeros.insert(index);
            created.push(Ray { y: y / norm, zeros });
        }
    }

    let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + created.len());
    for (k, mut r) in rays.into_iter().enumerate() {
        if values[k] >= -SIGN_TOL {
            if values[k] <= SIGN_TOL {
                r.zeros.insert(index);
            }
            next.push(r);
        }
    }
    next.extend(created);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::HalfSpace;

    fn sorted(vp: &VPolytope) -> Vec<Vec<f64>> {
        let mut v: Vec<Vec<f64>> = vp
            .vertices()
            .iter()
            .map(|x| x.iter().map(|c| (c * 1e9).round() / 1e9).collect())
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn square_vertices() {
        let v = enumerate_vertices(&HPolytope::cube(2)).unwrap();
        assert_eq!(
            sorted(&v),
            vec![
                vec![-1.0, -1.0],
                vec![-1.0, 1.0],
                vec![1.0, -1.0],
                vec![1.0, 1.0]
            ]
        );
    }

    #[test]
    fn triangle_vertices() {
        let v = enumerate_vertices(&HPolytope::standard_simplex(2)).unwrap();
        assert_eq!(
            sorted(&v),
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]
        );
    }

    #[test]
    fn open_cube_is_unbounded() {
        let cube = HPolytope::cube(3);
        let five = cube.subfamily(&[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(enumerate_vertices(&five), Err(Error::Unbounded));
    }

    #[test]
    fn degenerate_cross_polytope() {
        for n in 2..=5 {
            let v = enumerate_vertices(&HPolytope::cross_polytope(n)).unwrap();
            assert_eq!(v.vertices().len(), 2 * n, "n = {n}");
        }
    }

    #[test]
    fn redundant_and_duplicate_constraints() {
        let mut hs = HPolytope::cube(3).halfspaces().to_vec();
        hs.extend(HPolytope::cube(3).halfspaces().iter().cloned());
        hs.push(HalfSpace::from_slice(&[1.0, 1.0, 1.0], 3.0));
        hs.push(HalfSpace::from_slice(&[0.2, 0.1, 0.0], 5.0));
        let v = enumerate_vertices(&HPolytope::new(3, hs).unwrap()).unwrap();
        assert_eq!(v.vertices().len(), 8);
    }

    #[test]
    fn dimension_cap_and_empty() {
        let big = HPolytope::cube(9);
        assert_eq!(
            enumerate_vertices(&big),
            Err(Error::DimensionTooLarge { dim: 9, cap: 8 })
        );
        let empty = HPolytope::new(
            1,
            vec![
                HalfSpace::from_slice(&[1.0], -1.0),
                HalfSpace::from_slice(&[-1.0], -1.0),
            ],
        )
        .unwrap();
        assert_eq!(enumerate_vertices(&empty), Err(Error::InfeasibleBody));
    }
}
