use crate::error::{Error, Result};

use super::SparseMatrix;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradient for a symmetric positive definite `w`.
///
/// Stops when `||w y - b||_2 <= tol * ||b||_2`. Non-positive curvature is
/// reported as [`Error::NotPositiveDefinite`].
pub fn cg_solve(w: &SparseMatrix, b: &[f64], tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = w.rows();
    if !w.is_square() {
        return Err(Error::dims("cg_solve", n, w.cols()));
    }
    if b.len() != n {
        return Err(Error::dims("cg_solve", n, b.len()));
    }
    let b_norm = dot(b, b).sqrt();
    let mut y = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(y);
    }
    let target = tol * b_norm;
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut wp = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for _ in 0..max_iters {
        if rr.sqrt() <= target {
            return Ok(y);
        }
        w.matvec_into(&p, &mut wp);
        let curvature = dot(&p, &wp);
        if curvature <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: curvature / dot(&p, &p),
            });
        }
        let alpha = rr / curvature;
        for i in 0..n {
            y[i] += alpha * p[i];
            r[i] -= alpha * wp[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    // The recursive residual drifts; confirm with a true residual before failing.
    w.matvec_into(&y, &mut wp);
    let true_res = wp
        .iter()
        .zip(b)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    if true_res <= target {
        Ok(y)
    } else {
        Err(Error::NoConvergence {
            iterations: max_iters,
            residual: true_res / b_norm,
        })
    }
}
