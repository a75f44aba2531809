//! Minimum-volume enclosing ellipsoid of a point set.
//!
//! Khachiyan's barycentric coordinate ascent with Todd–Yildirim away steps,
//! run on the lifted points `q_i = (x_i, 1)`. With `X(u) = Σ u_i q_i q_iᵀ` and
//! `g_i = q_iᵀ X⁻¹ q_i`, the iteration stops once
//! `max_i g_i ≤ (n+1)(1+tol)` and `min_{u_i > 0} g_i ≥ (n+1)(1-tol)`.
//! The away steps make the convergence linear near the optimum, so `tol` can be
//! pushed far below what plain Khachiyan reaches.

use crate::convex::Ellipsoid;
use crate::error::{Error, Result};
use crate::linalg::{affine_dimension, outer, sym_eigen, Matrix, Vector};

#[derive(Debug, Clone, Copy)]
pub struct MveeOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MveeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 1_000_000,
        }
    }
}

/// Enclosing ellipsoid plus the optimal barycentric weights.
#[derive(Debug, Clone)]
pub struct EnclosingEllipsoid {
    pub ellipsoid: Ellipsoid,
    pub weights: Vec<f64>,
    pub iterations: usize,
}

pub fn min_enclosing_ellipsoid(points: &[Vector]) -> Result<Ellipsoid> {
    Ok(solve_mvee(points, MveeOptions::default())?.ellipsoid)
}

pub fn solve_mvee(points: &[Vector], opts: MveeOptions) -> Result<EnclosingEllipsoid> {
    let Some(first) = points.first() else {
        return Err(Error::DegeneratePointSet);
    };
    let n = first.len();
    if points.iter().any(|p| p.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: points.iter().find(|p| p.len() != n).map_or(0, |p| p.len()),
        });
    }
    let spread = points
        .iter()
        .map(|p| (p - first).amax())
        .fold(0.0, f64::max);
    let refs: Vec<&Vector> = points.iter().collect();
    if n == 0 || affine_dimension(&refs, 1e-10 * (1.0 + spread)) < n {
        return Err(Error::DegeneratePointSet);
    }

    let m = points.len();
    let d = n + 1;
    let df = d as f64;
    let lifted: Vec<Vector> = points
        .iter()
        .map(|p| p.clone().insert_row(n, 1.0))
        .collect();
    let mut u = vec![1.0 / m as f64; m];
    let moment = |u: &[f64]| {
        lifted
            .iter()
            .zip(u)
            .fold(Matrix::zeros(d, d), |acc, (q, w)| acc + outer(q, q) * *w)
    };
    let mut x_inv = moment(&u).try_inverse().ok_or(Error::DegeneratePointSet)?;

    let mut iterations = 0;
    for iter in 0..opts.max_iter {
        iterations = iter;
        // refresh the inverse now and then to shed rank-one update drift
        if iter % 200 == 199 {
            x_inv = moment(&u).try_inverse().ok_or(Error::DegeneratePointSet)?;
        }
        let g: Vec<f64> = lifted.iter().map(|q| q.dot(&(&x_inv * q))).collect();
        let (j, gj) = g
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |b, (i, v)| if v > b.1 { (i, v) } else { b },
            );
        let (k, gk) = g
            .iter()
            .copied()
            .enumerate()
            .filter(|&(i, _)| u[i] > 0.0)
            .fold(
                (0, f64::INFINITY),
                |b, (i, v)| if v < b.1 { (i, v) } else { b },
            );
        let up = gj / df - 1.0;
        let down = 1.0 - gk / df;
        if up.max(down) <= opts.tol {
            break;
        }
        let (idx, gi) = if up >= down { (j, gj) } else { (k, gk) };
        let mut beta = (gi - df) / (df * (gi - 1.0));
        let mut dropped = false;
        if up < down && beta <= -u[k] / (1.0 - u[k]) {
            beta = -u[k] / (1.0 - u[k]);
            dropped = true;
        }
        for w in u.iter_mut() {
            *w *= 1.0 - beta;
        }
        u[idx] += beta;
        if dropped {
            u[idx] = 0.0;
        }
        // X ← (1-β) X + β q qᵀ, inverse by Sherman–Morrison
        let q = &lifted[idx];
        let xq = &x_inv * q;
        let scale = 1.0 / (1.0 - beta);
        let denom = (1.0 - beta) + beta * gi;
        x_inv = (&x_inv - outer(&xq, &xq) * (beta / denom)) * scale;
    }

    let center = points
        .iter()
        .zip(&u)
        .fold(Vector::zeros(n), |acc, (p, w)| acc + p * *w);
    let s = points
        .iter()
        .zip(&u)
        .fold(Matrix::zeros(n, n), |acc, (p, w)| {
            let r = p - &center;
            acc + outer(&r, &r) * *w
        });
    let e = sym_eigen(&s);
    if e.min() <= 0.0 {
        return Err(Error::DegeneratePointSet);
    }
    let mut shape = e.map(|v| 1.0 / v) / n as f64;
    shape = (&shape + shape.transpose()) * 0.5;
    let reach = points
        .iter()
        .map(|p| {
            let r = p - &center;
            r.dot(&(&shape * &r))
        })
        .fold(0.0, f64::max);
    if reach > 1.0 {
        shape /= reach;
    }
    Ok(EnclosingEllipsoid {
        ellipsoid: Ellipsoid::new(center, shape)?,
        weights: u,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unit;

    #[test]
    fn cross_polytope_gives_unit_ball() {
        for n in 1..=5 {
            let pts: Vec<Vector> = (0..n).flat_map(|k| [unit(n, k), -unit(n, k)]).collect();
            let e = min_enclosing_ellipsoid(&pts).unwrap();
            assert!(e.center.amax() < 1e-10);
            assert!(
                (&e.shape - Matrix::identity(n, n)).amax() < 1e-9,
                "n = {n}: {}",
                e.shape
            );
        }
    }

    #[test]
    fn segment_in_one_dimension() {
        let pts = vec![Vector::from_vec(vec![0.0]), Vector::from_vec(vec![2.0])];
        let e = min_enclosing_ellipsoid(&pts).unwrap();
        assert!((e.center[0] - 1.0).abs() < 1e-12);
        assert!((e.shape[(0, 0)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn interior_points_get_zero_weight() {
        let mut pts: Vec<Vector> = (0..2).flat_map(|k| [unit(2, k), -unit(2, k)]).collect();
        pts.push(Vector::from_vec(vec![0.1, 0.2]));
        let r = solve_mvee(&pts, MveeOptions::default()).unwrap();
        assert!(r.weights[4] < 1e-9);
        assert!(r.ellipsoid.center.amax() < 1e-9);
    }

    #[test]
    fn degenerate_sets() {
        let pts = vec![
            Vector::from_vec(vec![0.0, 0.0]),
            Vector::from_vec(vec![1.0, 1.0]),
            Vector::from_vec(vec![2.0, 2.0]),
        ];
        assert_eq!(
            min_enclosing_ellipsoid(&pts).unwrap_err(),
            Error::DegeneratePointSet
        );
        assert_eq!(
            min_enclosing_ellipsoid(&[]).unwrap_err(),
            Error::DegeneratePointSet
        );
    }
}
