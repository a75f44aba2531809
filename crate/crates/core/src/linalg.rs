//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Dimensions in this crate are tiny (n <= 12 or so), so the symmetric
//! eigensolver is a plain cyclic Jacobi iteration run to a 1e-12 off-diagonal
//! norm. Everything else is thin glue.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

const JACOBI_OFF_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// Rebuild `V f(D) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            scaled.column_mut(k).scale_mut(s);
        }
        &scaled * self.vectors.transpose()
    }
}

/// Cyclic Jacobi rotations on a copy of `a` (only the symmetric part is used).
pub fn sym_eigen(a: &Matrix) -> SymEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = Matrix::identity(n, n);
    let scale = m.norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if (2.0 * off).sqrt() <= JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    SymEigen { values, vectors }
}

/// Spectral norm of a symmetric matrix.
pub fn sym_op_norm(a: &Matrix) -> f64 {
    let e = sym_eigen(a);
    e.min().abs().max(e.max().abs())
}

/// Principal square root of a symmetric positive semidefinite matrix.
pub fn sym_sqrt(a: &Matrix) -> Matrix {
    sym_eigen(a).map(|x| x.max(0.0).sqrt())
}

/// Inverse of a symmetric positive definite matrix, or `None` if some
/// eigenvalue is not positive relative to the largest.
pub fn sym_inverse(a: &Matrix) -> Option<Matrix> {
    let e = sym_eigen(a);
    if e.min() <= 1e-14 * e.max().abs().max(1.0) {
        return None;
    }
    Some(e.map(|x| 1.0 / x))
}

pub fn outer(u: &Vector, v: &Vector) -> Matrix {
    u * v.transpose()
}

/// Orthonormal basis of span{vectors} by modified Gram–Schmidt; vectors whose
/// residual falls below `tol` are treated as dependent.
pub fn orthonormal_basis<'a>(
    vectors: impl IntoIterator<Item = &'a Vector>,
    tol: f64,
) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    for v in vectors {
        let mut r = v.clone();
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&r);
                r.axpy(-c, b, 1.0);
            }
        }
        let nr = r.norm();
        if nr > tol {
            basis.push(r / nr);
        }
    }
    basis
}

/// Dimension of the affine hull of `points`.
pub fn affine_dimension(points: &[&Vector], tol: f64) -> usize {
    match points.split_first() {
        None => 0,
        Some((first, rest)) => {
            let diffs: Vec<Vector> = rest.iter().map(|p| *p - *first).collect();
            orthonormal_basis(diffs.iter(), tol).len()
        }
    }
}

/// Euclidean distance from `p` to the affine hull of `points`.
pub fn distance_to_affine_hull(p: &Vector, points: &[&Vector], tol: f64) -> f64 {
    let (first, rest) = points.split_first().expect("non-empty point set");
    let diffs: Vec<Vector> = rest.iter().map(|q| *q - *first).collect();
    let basis = orthonormal_basis(diffs.iter(), tol);
    let mut r = p - *first;
    for _ in 0..2 {
        for b in &basis {
            let c = b.dot(&r);
            r.axpy(-c, b, 1.0);
        }
    }
    r.norm()
}

pub fn unit(n: usize, k: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[k] = 1.0;
    e
}

/// The `n+1` unit vectors of a regular simplex centred at the origin, with
/// pairwise inner products `-1/n`. Vector `j` is `e_j - 1/(n+1)` in `R^{n+1}`,
/// rescaled to unit length and written in the Helmert basis of `1^⊥`.
pub fn regular_simplex_directions(n: usize) -> Vec<Vector> {
    let scale = ((n + 1) as f64 / n as f64).sqrt();
    (0..=n)
        .map(|j| {
            Vector::from_fn(n, |k, _| {
                // Helmert row k: (1, …, 1, -(k+1), 0, …) / √((k+1)(k+2))
                let kk = k + 1;
                let norm = ((kk * (kk + 1)) as f64).sqrt();
                let entry = match j.cmp(&kk) {
                    std::cmp::Ordering::Less => 1.0,
                    std::cmp::Ordering::Equal => -(kk as f64),
                    std::cmp::Ordering::Greater => 0.0,
                };
                scale * entry / norm
            })
        })
        .collect()
}

/// Serde adapters so that vectors serialize as plain JSON arrays.
pub mod serde_vec {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let data = Vec::<f64>::deserialize(d)?;
        Ok(Vector::from_vec(data))
    }

    pub mod list {
        use super::super::Vector;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(vs: &[Vector], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(vs.iter().map(|v| v.as_slice()))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector>, D::Error> {
            let data = Vec::<Vec<f64>>::deserialize(d)?;
            Ok(data.into_iter().map(Vector::from_vec).collect())
        }
    }

    pub mod matrix {
        use super::super::Matrix;
        use serde::{Deserialize, Deserializer, Serializer};

        /// Row-major nested arrays.
        pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
            let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
            s.collect_seq(rows)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
            let rows = Vec::<Vec<f64>>::deserialize(d)?;
            let nrows = rows.len();
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(serde::de::Error::custom("ragged matrix"));
            }
            Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_known_spectrum() {
        let a = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let e = sym_eigen(&a);
        let s2 = 2f64.sqrt();
        let expected = [2.0 - s2, 2.0, 2.0 + s2];
        for (got, want) in e.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let rebuilt = e.map(|x| x);
        assert!((rebuilt - a).norm() < 1e-12);
    }

    #[test]
    fn sqrt_and_inverse_of_spd() {
        let a = Matrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let r = sym_sqrt(&a);
        assert!((&r * &r - &a).norm() < 1e-12);
        let inv = sym_inverse(&a).unwrap();
        assert!((&inv * &a - Matrix::identity(2, 2)).norm() < 1e-12);
        assert!(sym_inverse(&Matrix::zeros(2, 2)).is_none());
    }

    #[test]
    fn regular_simplex_gram() {
        for n in 1..=7 {
            let u = regular_simplex_directions(n);
            assert_eq!(u.len(), n + 1);
            for i in 0..=n {
                assert!((u[i].norm() - 1.0).abs() < 1e-14);
                for j in (i + 1)..=n {
                    assert!((u[i].dot(&u[j]) + 1.0 / n as f64).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn affine_hull_helpers() {
        let pts = [
            Vector::from_vec(vec![0.0, 0.0, 1.0]),
            Vector::from_vec(vec![1.0, 0.0, 1.0]),
            Vector::from_vec(vec![0.0, 1.0, 1.0]),
        ];
        let refs: Vec<&Vector> = pts.iter().collect();
        assert_eq!(affine_dimension(&refs, 1e-12), 2);
        let d = distance_to_affine_hull(&Vector::from_vec(vec![0.3, 0.3, 3.0]), &refs, 1e-12);
        assert!((d - 2.0).abs() < 1e-12);
    }
}
