//! Dense symmetric linear algebra for small systems.
//!
//! Covariance matrices here are (n+1) x (n+1) with n the number of
//! exogenous variables, so a hand-rolled Cholesky factorization and a
//! cyclic Jacobi eigensolver are plenty and keep results deterministic
//! across platforms.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix. Returns `None` if a pivot is not strictly positive.
pub(crate) fn cholesky(a: ArrayView2<'_, f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solves `L L' x = b` by forward and back substitution.
pub(crate) fn cholesky_solve(l: &Array2<f64>, b: ArrayView1<'_, f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors
/// as rows. Deterministic: fixed sweep order, tolerance relative to the
/// Frobenius norm.
pub(crate) fn symmetric_eigen(a: ArrayView2<'_, f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.to_owned();
    let mut v = Array2::<f64>::eye(n);
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
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
    order.sort_by(|&i, &j| {
        m[(j, j)]
            .partial_cmp(&m[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (row, &idx) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(row, k)] = v[(k, idx)];
        }
    }
    (eigenvalues, vectors)
}

/// Eigenvalues only, descending.
pub(crate) fn symmetric_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    symmetric_eigen(a.view()).0
}

/// Spectral condition number of a symmetric PSD matrix; infinite when the
/// smallest eigenvalue is not strictly positive.
pub(crate) fn condition_number(eigenvalues: &[f64]) -> f64 {
    let max = eigenvalues.first().copied().unwrap_or(0.0);
    let min = eigenvalues.last().copied().unwrap_or(0.0);
    if min <= 0.0 || max <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Cholesky-backed SPD solve guarded by a spectral condition-number check.
///
/// Returns the solution together with the condition number so callers can
/// report it. The guard errors out instead of silently pseudo-inverting.
pub(crate) fn guarded_spd_solve(
    sigma: ArrayView2<'_, f64>,
    b: ArrayView1<'_, f64>,
    max_condition: f64,
) -> Result<(Array1<f64>, f64)> {
    let eigenvalues = symmetric_eigen(sigma).0;
    let condition = condition_number(&eigenvalues);
    if !condition.is_finite() || condition >= max_condition {
        return Err(Error::SingularCovariance { condition });
    }
    let l = cholesky(sigma).ok_or(Error::SingularCovariance { condition })?;
    Ok((cholesky_solve(&l, b), condition))
}

/// Default condition-number ceiling for covariance solves.
pub(crate) const MAX_CONDITION: f64 = 1e12;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    #[test]
    fn cholesky_solve_recovers_known_solution() {
        let a = arr2(&[[4.0, 1.0, 0.2], [1.0, 3.0, 0.5], [0.2, 0.5, 2.0]]);
        let x_true = ndarray::arr1(&[1.0, -2.0, 0.5]);
        let b = a.dot(&x_true);
        let l = cholesky(a.view()).unwrap();
        let x = cholesky_solve(&l, b.view());
        for i in 0..3 {
            assert_abs_diff_eq!(x[i], x_true[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = arr2(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(cholesky(a.view()).is_none());
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = arr2(&[[3.0, 1.0, 0.5], [1.0, 2.5, -0.3], [0.5, -0.3, 1.5]]);
        let (vals, vecs) = symmetric_eigen(a.view());
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        // A = V' diag(vals) V with eigenvectors as rows of V
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += vecs[(k, i)] * vals[k] * vecs[(k, j)];
                }
                assert_abs_diff_eq!(s, a[(i, j)], epsilon = 1e-10);
            }
        }
        // rows orthonormal
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| vecs[(i, k)] * vecs[(j, k)]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn guard_flags_singular_matrix() {
        let a = arr2(&[[1.0, 1.0], [1.0, 1.0]]);
        let b = ndarray::arr1(&[1.0, 1.0]);
        match guarded_spd_solve(a.view(), b.view(), MAX_CONDITION) {
            Err(Error::SingularCovariance { condition }) => {
                assert!(!condition.is_finite() || condition >= MAX_CONDITION)
            }
            other => panic!("expected SingularCovariance, got {other:?}"),
        }
    }
}
