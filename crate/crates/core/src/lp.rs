//! Dense two-phase simplex for standard-form linear programs
//!
//! ```text
//!     minimize cᵀy   subject to   E y = f,  y ≥ 0
//! ```
//!
//! Every LP in this crate either has this shape directly (gauges of
//! V-polytopes, Carathéodory feasibility) or is the dual of
//! `max ⟨d, x⟩ s.t. Ax ≤ b` with `x` free, which has only `dim` equality rows.
//! So the tableau is always short and wide and a dense implementation is the
//! right tool.
//!
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so that the method cannot cycle.

use crate::linalg::{Matrix, Vector};

const COST_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Primal solution `y`.
    pub y: Vec<f64>,
    /// Optimal objective `cᵀy`.
    pub value: f64,
    /// Multipliers `π` of the equality rows, so that `c - Eᵀπ ≥ 0` at optimum.
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize, // real columns + artificials + rhs
    data: Vec<f64>,
    basis: Vec<usize>,
    n_real: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols - 1)
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let w = self.cols;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f != 0.0 {
                for (j, pr) in pivot_row.iter().enumerate() {
                    self.data[i * w + j] -= f * pr;
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (j, pr) in pivot_row.iter().enumerate() {
                obj[j] -= f * pr;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row (with the negated objective value in the last slot).
    fn objective_row(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj = vec![0.0; self.cols];
        obj[..cost.len()].copy_from_slice(cost);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (j, o) in obj.iter_mut().enumerate() {
                    *o -= cb * self.at(i, j);
                }
            }
        }
        obj
    }

    /// Runs primal simplex on columns `0..allowed`. Returns false on unboundedness.
    fn optimize(&mut self, obj: &mut [f64], allowed: usize) -> Result<bool, ()> {
        let mut degenerate = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -COST_TOL;
            for (j, &oj) in obj.iter().enumerate().take(allowed) {
                if oj < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = oj;
                }
            }
            let Some(c) = enter else { return Ok(true) };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-13
                                || (ratio <= best_ratio + 1e-13 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else { return Ok(false) };
            if best_ratio <= 1e-13 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c, obj);
        }
        Err(())
    }
}

/// Solve `min cᵀy, Ey = f, y ≥ 0`.
pub fn solve_standard(e: &Matrix, f: &[f64], c: &[f64]) -> LpOutcome {
    let p = e.nrows();
    let q = e.ncols();
    assert_eq!(f.len(), p);
    assert_eq!(c.len(), q);

    let cols = q + p + 1;
    let mut data = vec![0.0; p * cols];
    let mut signs = vec![1.0; p];
    for i in 0..p {
        let s = if f[i] < 0.0 { -1.0 } else { 1.0 };
        signs[i] = s;
        for j in 0..q {
            data[i * cols + j] = s * e[(i, j)];
        }
        data[i * cols + q + i] = 1.0;
        data[i * cols + cols - 1] = s * f[i];
    }
    let mut t = Tableau {
        rows: p,
        cols,
        data,
        basis: (q..q + p).collect(),
        n_real: q,
    };

    // phase 1
    let mut phase1_cost = vec![0.0; q + p];
    for a in &mut phase1_cost[q..] {
        *a = 1.0;
    }
    let mut obj = t.objective_row(&phase1_cost);
    match t.optimize(&mut obj, q) {
        Ok(true) => {}
        Ok(false) | Err(()) => return LpOutcome::Infeasible,
    }
    let infeas = -obj[cols - 1];
    let fscale = 1.0 + f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if infeas > 1e-9 * fscale {
        return LpOutcome::Infeasible;
    }
    // drive artificials out of the basis where possible
    for i in 0..p {
        if t.basis[i] >= q {
            let mut col = None;
            let mut best = PIVOT_TOL;
            for j in 0..q {
                let a = t.at(i, j).abs();
                if a > best {
                    best = a;
                    col = Some(j);
                }
            }
            if let Some(j) = col {
                let mut dummy = vec![0.0; cols];
                t.pivot(i, j, &mut dummy);
            }
        }
    }

    // phase 2
    let mut cost = vec![0.0; q + p];
    cost[..q].copy_from_slice(c);
    let mut obj = t.objective_row(&cost);
    match t.optimize(&mut obj, q) {
        Ok(true) => {}
        Ok(false) => return LpOutcome::Unbounded,
        Err(()) => return LpOutcome::Infeasible,
    }

    let mut y = vec![0.0; q];
    for i in 0..p {
        if t.basis[i] < t.n_real {
            y[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    refine_basic_solution(e, f, &t.basis, q, &mut y);
    let value = c.iter().zip(&y).map(|(a, b)| a * b).sum();
    let duals = (0..p).map(|i| -signs[i] * obj[q + i]).collect();
    LpOutcome::Optimal(LpSolution { y, value, duals })
}

/// Re-solve `B y_B = f` from the original data when the final basis is made
/// of real columns only; this removes the round-off accumulated by pivoting.
fn refine_basic_solution(e: &Matrix, f: &[f64], basis: &[usize], q: usize, y: &mut [f64]) {
    if basis.iter().any(|&b| b >= q) {
        return;
    }
    let p = basis.len();
    let b = Matrix::from_fn(p, p, |i, k| e[(i, basis[k])]);
    let rhs = Vector::from_column_slice(f);
    if let Some(sol) = b.lu().solve(&rhs) {
        if sol.iter().all(|v| v.is_finite() && *v >= -1e-9) {
            let mut residual_ok = true;
            // only accept if it does not worsen feasibility
            let mut test = vec![0.0; y.len()];
            for (k, &col) in basis.iter().enumerate() {
                test[col] = sol[k].max(0.0);
            }
            for i in 0..p {
                let r: f64 = (0..q).map(|j| e[(i, j)] * test[j]).sum::<f64>() - f[i];
                if r.abs() > 1e-9 * (1.0 + f[i].abs()) {
                    residual_ok = false;
                    break;
                }
            }
            if residual_ok {
                y.copy_from_slice(&test);
            }
        }
    }
}

/// Outcome of maximizing a linear functional over `{x : Ax ≤ b}`.
#[derive(Debug, Clone)]
pub enum Support {
    Finite {
        value: f64,
        point: Vector,
    },
    /// Unbounded above, or the region is empty; callers that care check
    /// feasibility first.
    UnboundedOrEmpty,
    Empty,
}

/// `max ⟨d, x⟩ s.t. ⟨a_i, x⟩ ≤ b_i`, solved through its dual
/// `min bᵀy s.t. Aᵀy = d, y ≥ 0`. The maximizer is the dual multiplier vector.
pub fn maximize(a: &Matrix, b: &[f64], d: &Vector) -> Support {
    let at = a.transpose();
    match solve_standard(&at, d.as_slice(), b) {
        LpOutcome::Optimal(sol) => Support::Finite {
            value: sol.value,
            point: Vector::from_vec(sol.duals),
        },
        LpOutcome::Infeasible => Support::UnboundedOrEmpty,
        LpOutcome::Unbounded => Support::Empty,
    }
}
