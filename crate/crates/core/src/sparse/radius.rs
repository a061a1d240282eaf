//! Spectral radius of general (nonsymmetric) square matrices.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::SparseMatrix;

/// Dimensions up to this use a dense Schur decomposition.
pub const DENSE_RADIUS_LIMIT: usize = 400;

/// Largest eigenvalue modulus of `a`.
///
/// Dense Schur decomposition up to [`DENSE_RADIUS_LIMIT`], restarted Arnoldi
/// above it.
pub fn spectral_radius(a: &SparseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::dims("spectral_radius", a.rows(), a.cols()));
    }
    if a.rows() <= DENSE_RADIUS_LIMIT {
        Ok(dense_spectral_radius(&a.to_dense()))
    } else {
        Ok(arnoldi_radius(a, 1e-11))
    }
}

pub fn dense_spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Explicitly restarted Arnoldi targeting the eigenvalue of largest modulus.
/// Restarts from the real and imaginary parts of the leading Ritz vector.
fn arnoldi_radius(a: &SparseMatrix, tol: f64) -> f64 {
    let n = a.rows();
    let m = n.min(120);
    let max_restarts = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0a7d);
    let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut best = 0.0;
    for _ in 0..max_restarts {
        let norm = dot(&start, &start).sqrt();
        start.iter_mut().for_each(|x| *x /= norm);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let mut k = m;
        for j in 0..m {
            let mut w = a.matvec(&basis[j]).expect("square");
            for _ in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c = dot(&w, b);
                    h[(i, j)] += c;
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
                }
            }
            let hn = dot(&w, &w).sqrt();
            h[(j + 1, j)] = hn;
            if hn <= 1e-13 * h[(0, 0)].abs().max(1.0) {
                k = j + 1;
                break;
            }
            w.iter_mut().for_each(|x| *x /= hn);
            basis.push(w);
        }
        let hk = h.view((0, 0), (k, k)).into_owned();
        let ritz = hk.complex_eigenvalues();
        let theta = ritz
            .iter()
            .copied()
            .fold(Complex::new(0.0, 0.0), |acc, z| if z.norm() > acc.norm() { z } else { acc });
        best = theta.norm();
        if k < m {
            return best;
        }
        let y = ritz_vector(&hk, theta);
        let residual = h[(k, k - 1)] * y[k - 1].norm();
        if residual <= tol * best.max(f64::MIN_POSITIVE) {
            return best;
        }
        start = vec![0.0; n];
        for (i, b) in basis.iter().take(k).enumerate() {
            let coef = y[i].re + y[i].im;
            start.iter_mut().zip(b).for_each(|(s, bi)| *s += coef * bi);
        }
    }
    best
}

/// Unit eigenvector of `h` for the eigenvalue `theta` by complex inverse iteration.
fn ritz_vector(h: &DMatrix<f64>, theta: Complex<f64>) -> DVector<Complex<f64>> {
    let k = h.nrows();
    let shift = theta + Complex::new(1e-10 * theta.norm().max(1e-300), 0.0);
    let shifted = DMatrix::from_fn(k, k, |i, j| {
        let v = Complex::new(h[(i, j)], 0.0);
        if i == j {
            v - shift
        } else {
            v
        }
    });
    let lu = shifted.lu();
    let mut y = DVector::from_fn(k, |i, _| Complex::new(1.0 / (1.0 + i as f64), 0.5));
    for _ in 0..3 {
        if let Some(next) = lu.solve(&y) {
            let norm = next.norm();
            if norm.is_finite() && norm > 0.0 {
                y = next / Complex::new(norm, 0.0);
            }
        }
    }
    y
}
