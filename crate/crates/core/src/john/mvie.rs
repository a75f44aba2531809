//! Maximum-volume inscribed ellipsoid of `{x : Ax ≤ b}`.
//!
//! Primal-dual interior-point method on the optimality system
//!
//! ```text
//!   Aᵀ(y ∘ h) = 0,   b - Ax - h - z = 0,   y ∘ z = μ,
//!   h_i = ‖E a_i‖,   E² = (Aᵀ Y A)⁻¹
//! ```
//!
//! where the ellipsoid is `{x + E s : ‖s‖ ≤ 1}`. Rows are first rescaled by
//! their slack at the Chebyshev center so that `b = 1` and the start is
//! well centred. The final ellipsoid is shrunk (by at most round-off) so that
//! `‖E a_i‖ ≤ b_i - ⟨a_i, x⟩` holds for every facet.

use crate::convex::{chebyshev_center, is_bounded, Ellipsoid, HPolytope};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, Matrix, Vector};

/// Solver settings. The defaults drive the barrier parameter close to zero,
/// which keeps the centre and shape well inside the 1e-6 re-solve audit.
#[derive(Debug, Clone, Copy)]
pub struct MvieOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub min_mu: f64,
}

impl Default for MvieOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-10,
            min_mu: 1e-12,
        }
    }
}

/// Inscribed ellipsoid together with its root `E` (so `E ⊆ P` is `{c + E s}`).
#[derive(Debug, Clone)]
pub struct InscribedEllipsoid {
    pub center: Vector,
    /// `E`, symmetric positive definite.
    pub root: Matrix,
    pub iterations: usize,
}

impl InscribedEllipsoid {
    pub fn ellipsoid(&self) -> Ellipsoid {
        let e2 = &self.root * &self.root;
        let shape = sym_eigen(&e2).map(|x| 1.0 / x);
        let shape = (&shape + shape.transpose()) * 0.5;
        Ellipsoid::new(self.center.clone(), shape).expect("root is positive definite")
    }

    /// `log det E`, the log-volume relative to the unit ball.
    pub fn log_volume_ratio(&self) -> f64 {
        sym_eigen(&self.root).values.iter().map(|v| v.ln()).sum()
    }
}

pub fn max_inscribed_ellipsoid(p: &HPolytope) -> Result<Ellipsoid> {
    Ok(solve_mvie(p, MvieOptions::default())?.ellipsoid())
}

pub fn solve_mvie(p: &HPolytope, opts: MvieOptions) -> Result<InscribedEllipsoid> {
    let n = p.dim();
    let (x0, radius) = chebyshev_center(p)?;
    if !is_bounded(p)? {
        return Err(Error::Unbounded);
    }
    let (a_raw, b_raw) = p.matrix();
    let scale = 1.0 + x0.amax() + b_raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if radius <= 1e-10 * scale {
        return Err(Error::DegenerateBody);
    }
    let m = p.len();

    // rescale rows: a_i ← a_i / (b_i - a_i·x0), b ← 1, x measured from x0
    let mut a = a_raw.clone();
    for i in 0..m {
        let slack = b_raw[i] - a_raw.row(i).transpose().dot(&x0);
        a.row_mut(i).scale_mut(1.0 / slack);
    }
    let at = a.transpose();
    let bnrm = (m as f64).sqrt();

    let mut x = Vector::zeros(n);
    let mut y = Vector::from_element(m, 1.0);
    let mut z = Vector::zeros(m);
    let mut bmax = Vector::from_element(m, 1.0);
    let mut astep = 0.0;
    let mut adx = Vector::zeros(m);
    let mut e2 = Matrix::identity(n, n);
    let mut iterations = 0;
    let mut converged = false;

    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        if iter > 0 {
            bmax -= &adx * astep;
        }
        let aty_a = weighted_gram(&at, &y);
        e2 = aty_a.try_inverse().ok_or_else(|| {
            Error::SolverFailed("singular normal matrix in ellipsoid solver".into())
        })?;
        let mut q = &a * &e2 * &at;
        let mut h = Vector::from_fn(m, |i, _| q[(i, i)].max(0.0).sqrt());
        if iter == 0 {
            let t = (0..m).map(|i| bmax[i] / h[i]).fold(f64::INFINITY, f64::min);
            y /= t * t;
            h *= t;
            z = Vector::from_fn(m, |i, _| (bmax[i] - h[i]).max(0.1));
            q *= t * t;
        }

        let yz = y.component_mul(&z);
        let yh = y.component_mul(&h);
        let gap = yz.sum() / m as f64;
        let rmu = (gap.min(0.5) * gap).max(opts.min_mu);

        let r1 = -(&at * &yh);
        let r2 = &bmax - &h - &z;
        let r3 = Vector::from_element(m, rmu) - &yz;
        let res = r1.amax().max(r2.amax()).max(r3.amax());
        if res < opts.tol * (1.0 + bnrm) && rmu <= opts.min_mu {
            converged = true;
            break;
        }

        let yq = Matrix::from_fn(m, m, |i, j| y[i] * q[(i, j)]);
        let y2h = &yh * 2.0;
        let ya = Matrix::from_fn(m, n, |i, j| y[i] * a[(i, j)]);
        let mut g = yq.component_mul(&yq.transpose());
        for i in 0..m {
            g[(i, i)] += (y2h[i] * z[i]).max(1e-12);
        }
        let g_lu = g.lu();
        let rhs_t = Matrix::from_fn(m, n, |i, j| (h[i] + z[i]) * ya[(i, j)]);
        let t_mat = g_lu.solve(&rhs_t).ok_or_else(|| {
            Error::SolverFailed("singular Newton system in ellipsoid solver".into())
        })?;
        let atp = (Matrix::from_fn(m, n, |i, j| y2h[i] * t_mat[(i, j)]) - &ya).transpose();
        let r3dy = r3.component_div(&y);
        let r23 = &r2 - &r3dy;
        let atp_a = &atp * &a;
        let atp_a = (&atp_a + atp_a.transpose()) * 0.5;
        let dx = atp_a.lu().solve(&(&r1 + &atp * &r23)).ok_or_else(|| {
            Error::SolverFailed("singular reduced system in ellipsoid solver".into())
        })?;
        adx = &a * &dx;
        let dydy = g_lu
            .solve(&y2h.component_mul(&(&adx - &r23)))
            .ok_or_else(|| {
                Error::SolverFailed("singular Newton system in ellipsoid solver".into())
            })?;
        let dy = y.component_mul(&dydy);
        let dz = &r3dy - z.component_mul(&dydy);

        let ax = -1.0 / (0..m).map(|i| -adx[i] / bmax[i]).fold(-0.5, f64::min);
        let ay = -1.0 / dydy.iter().copied().fold(-0.5, f64::min);
        let az = -1.0 / (0..m).map(|i| dz[i] / z[i]).fold(-0.5, f64::min);
        let tau = (1.0 - res).max(0.75);
        astep = tau * 1f64.min(ax).min(ay).min(az);

        x += &dx * astep;
        y += &dy * astep;
        z += &dz * astep;
    }
    if !converged {
        return Err(Error::SolverFailed(format!(
            "ellipsoid solver did not converge in {} iterations",
            opts.max_iter
        )));
    }

    let root = sym_eigen(&e2).map(|v| v.max(0.0).sqrt());
    let center = &x + &x0;
    // exact feasibility: ‖E a_i‖ ≤ b_i - ⟨a_i, c⟩ in the original data
    let mut shrink: f64 = 1.0;
    for i in 0..m {
        let ai = a_raw.row(i).transpose();
        let reach = (&root * &ai).norm();
        let slack = b_raw[i] - ai.dot(&center);
        if slack <= 0.0 {
            return Err(Error::SolverFailed(
                "ellipsoid centre left the polytope".into(),
            ));
        }
        if reach > slack {
            shrink = shrink.min(slack / reach);
        }
    }
    Ok(InscribedEllipsoid {
        center,
        root: root * shrink,
        iterations,
    })
}

/// `Aᵀ diag(y) A`
fn weighted_gram(at: &Matrix, y: &Vector) -> Matrix {
    let mut scaled = at.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= y[j];
    }
    let g = &scaled * at.transpose();
    (&g + g.transpose()) * 0.5
}
