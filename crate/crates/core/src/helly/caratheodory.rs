//! Carathéodory reduction: write a point of `conv(points)` with at most `n+1`
//! of the points.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::lp::{self, LpOutcome};

const RESIDUAL_TOL: f64 = 1e-8;
const ZERO_TOL: f64 = 1e-14;

/// Indices `τ` and coefficients `ρ > 0`, `Σρ = 1`, with `Σ ρ_i points[τ_i] = w`
/// and `|τ| ≤ n+1`.
pub fn caratheodory_reduce(points: &[Vector], w: &Vector) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = w.len();
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let m = points.len();
    if m == 0 {
        return Err(Error::NotInHull);
    }
    let e = Matrix::from_fn(n + 1, m, |i, j| if i == n { 1.0 } else { points[j][i] });
    let mut f: Vec<f64> = w.iter().copied().collect();
    f.push(1.0);
    // strictly increasing, incommensurate costs pin down one vertex of the
    // feasible set, which is unchanged when points and w move together
    let cost: Vec<f64> = (0..m).map(|j| ((j + 1) as f64).sqrt()).collect();
    let sol = match lp::solve_standard(&e, &f, &cost) {
        LpOutcome::Optimal(sol) => sol,
        _ => return Err(Error::NotInHull),
    };
    let support: Vec<usize> = (0..m).filter(|&j| sol.y[j] > ZERO_TOL).collect();
    let coeffs: Vec<f64> = support.iter().map(|&j| sol.y[j]).collect();
    let (tau, rho) = reduce_support(points, support, coeffs)?;
    let residual = combination(points, &tau, &rho) - w;
    if residual.amax() > RESIDUAL_TOL * (1.0 + w.amax()) {
        return Err(Error::NotInHull);
    }
    Ok((tau, rho))
}

fn combination(points: &[Vector], idx: &[usize], coeffs: &[f64]) -> Vector {
    let n = points.first().map_or(0, |p| p.len());
    idx.iter()
        .zip(coeffs)
        .fold(Vector::zeros(n), |acc, (&j, &c)| acc + &points[j] * c)
}

/// Shrink a convex combination to at most `n+1` terms. Each round finds an
/// affine dependence `Σ μ_i p_i = 0`, `Σ μ_i = 0` among the current support and
/// moves along it until one coefficient hits zero.
pub fn reduce_support(
    points: &[Vector],
    mut idx: Vec<usize>,
    mut coeffs: Vec<f64>,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if idx.len() != coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: idx.len(),
            got: coeffs.len(),
        });
    }
    if let Some(&j) = idx.iter().find(|&&j| j >= points.len()) {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: points.len(),
        });
    }
    let n = points.first().map_or(0, |p| p.len());
    prune(&mut idx, &mut coeffs);
    while idx.len() > n + 1 {
        let k = idx.len();
        // (n+1) x k has a nontrivial kernel since k > n+1; pad to square for the SVD
        let lifted = Matrix::from_fn(k, k, |i, j| {
            if i < n {
                points[idx[j]][i]
            } else if i == n {
                1.0
            } else {
                0.0
            }
        });
        let svd = lifted.svd(false, true);
        let vt = svd
            .v_t
            .ok_or_else(|| Error::SolverFailed("SVD in Carathéodory reduction".into()))?;
        let smallest = (0..k)
            .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
            .expect("non-empty");
        let mut mu: Vec<f64> = vt.row(smallest).iter().copied().collect();
        if !mu.iter().any(|&x| x > 0.0) {
            for x in &mut mu {
                *x = -*x;
            }
        }
        let mut step = f64::INFINITY;
        let mut drop = 0;
        for i in 0..k {
            if mu[i] > 0.0 {
                let t = coeffs[i] / mu[i];
                if t < step {
                    step = t;
                    drop = i;
                }
            }
        }
        for i in 0..k {
            coeffs[i] -= step * mu[i];
        }
        coeffs[drop] = 0.0;
        prune(&mut idx, &mut coeffs);
    }
    let total: f64 = coeffs.iter().sum();
    for c in &mut coeffs {
        *c /= total;
    }
    Ok((idx, coeffs))
}

fn prune(idx: &mut Vec<usize>, coeffs: &mut Vec<f64>) {
    let keep: Vec<bool> = coeffs.iter().map(|&c| c > ZERO_TOL).collect();
    let mut k = 0;
    idx.retain(|_| {
        k += 1;
        keep[k - 1]
    });
    coeffs.retain(|&c| c > ZERO_TOL);
}
