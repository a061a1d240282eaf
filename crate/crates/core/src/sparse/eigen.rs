//! Extremal eigenvalues and condition numbers of symmetric positive definite matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{cg_solve, SparseMatrix};

/// Largest dimension handled by the dense eigensolver.
pub const DENSE_EIGEN_LIMIT: usize = 4096;

/// Relative accuracy targeted by the iterative estimator.
pub const ITERATIVE_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionMode {
    /// Dense symmetric eigendecomposition.
    Exact,
    /// Lanczos on `W` for the top of the spectrum and on `W^{-1}` (applied
    /// through conjugate gradient) for the bottom.
    Iterative,
    /// `Exact` up to [`DENSE_EIGEN_LIMIT`], `Iterative` above.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumBounds {
    pub min: f64,
    pub max: f64,
}

impl SpectrumBounds {
    pub fn condition_number(&self) -> f64 {
        self.max / self.min
    }
}

/// `kappa = lambda_max / lambda_min` of a symmetric positive definite `w`.
pub fn condition_number(w: &SparseMatrix, mode: ConditionMode) -> Result<f64> {
    extreme_eigenvalues(w, mode).map(|s| s.condition_number())
}

pub fn extreme_eigenvalues(w: &SparseMatrix, mode: ConditionMode) -> Result<SpectrumBounds> {
    let n = w.rows();
    if !w.is_square() {
        return Err(Error::dims("condition_number", n, w.cols()));
    }
    if n == 0 {
        return Err(Error::Precondition("empty matrix".into()));
    }
    let exact = match mode {
        ConditionMode::Exact => true,
        ConditionMode::Iterative => false,
        ConditionMode::Auto => n <= DENSE_EIGEN_LIMIT,
    };
    let bounds = if exact {
        if n > DENSE_EIGEN_LIMIT {
            return Err(Error::TooLarge {
                dim: n,
                limit: DENSE_EIGEN_LIMIT,
            });
        }
        dense_extremes(&w.to_dense())
    } else {
        iterative_extremes(w)?
    };
    if !(bounds.min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: bounds.min,
        });
    }
    Ok(bounds)
}

pub(crate) fn dense_extremes(m: &DMatrix<f64>) -> SpectrumBounds {
    let eig = m.clone().symmetric_eigenvalues();
    let (min, max) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    SpectrumBounds { min, max }
}

fn iterative_extremes(w: &SparseMatrix) -> Result<SpectrumBounds> {
    let n = w.rows();
    let mut scratch = vec![0.0; n];
    let max = lanczos_largest(n, |x, y| w.matvec_into(x, y), &mut scratch)?;
    let inner_tol = 1e-12;
    let mut failure = None;
    let inv_max = lanczos_largest(
        n,
        |x, y| match cg_solve(w, x, inner_tol, 20 * n + 100) {
            Ok(sol) => y.copy_from_slice(&sol),
            Err(e) => {
                failure.get_or_insert(e);
                y.iter_mut().for_each(|v| *v = 0.0);
            }
        },
        &mut scratch,
    )?;
    if let Some(e) = failure {
        return Err(match e {
            Error::NoConvergence { .. } => Error::NotPositiveDefinite { min_eigenvalue: 0.0 },
            other => other,
        });
    }
    Ok(SpectrumBounds {
        min: 1.0 / inv_max,
        max,
    })
}

/// Largest eigenvalue of a symmetric operator by Lanczos with full
/// reorthogonalization. Converged when the Ritz residual drops below
/// `1e-8` relative.
fn lanczos_largest<F>(n: usize, mut apply: F, scratch: &mut [f64]) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let max_steps = n.min(400);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_205a);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut estimate = 0.0;
    for step in 0..max_steps {
        apply(&basis[step], scratch);
        let mut w = scratch.to_vec();
        let alpha = dot(&w, &basis[step]);
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let beta = dot(&w, &w).sqrt();

        let k = alphas.len();
        let last = step + 1 == max_steps || beta <= 1e-14 * alpha.abs();
        if k > 20 && k % 10 != 0 && !last {
            betas.push(beta);
            w.iter_mut().for_each(|x| *x /= beta);
            basis.push(w);
            continue;
        }
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (idx, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let residual = (beta * eig.eigenvectors[(k - 1, idx)]).abs();
        estimate = theta;
        if residual <= 1e-8 * theta.abs().max(f64::MIN_POSITIVE) || beta <= 1e-14 * theta.abs() {
            return Ok(estimate);
        }
        if step + 1 == max_steps {
            break;
        }
        betas.push(beta);
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }
    Ok(estimate)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}
