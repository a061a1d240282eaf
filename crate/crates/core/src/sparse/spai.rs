//! Static-pattern sparse approximate inverse.
//!
//! Minimizes `||I - W X||_F` over matrices `X` whose stored entries lie in a
//! prescribed pattern. The Frobenius objective splits into one independent
//! least-squares problem per column of `X`: for column `k` with allowed rows
//! `J`, only the rows `I` touched by the columns `J` of `W` contribute, and
//! `x = argmin ||e_k(I) - W(I, J) x||_2`.
//!
//! Columns sharing the same `J` share the factorization of `W(I, J)`, which
//! is the common case for block-structured patterns.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{SparseMatrix, SparsityPattern};

/// Result of [`spai`]: the approximate inverse plus per-column diagnostics.
#[derive(Clone, Debug)]
pub struct SpaiResult {
    pub inverse: SparseMatrix,
    /// `true` for columns whose local least-squares block was rank deficient
    /// and was solved in the minimum-norm sense instead.
    pub rank_deficient: Vec<bool>,
}

impl SpaiResult {
    pub fn rank_deficient_count(&self) -> usize {
        self.rank_deficient.iter().filter(|f| **f).count()
    }
}

struct ColumnGroup<'a> {
    allowed: &'a [usize],
    columns: Vec<usize>,
}

struct GroupSolution {
    // (column, row, value)
    entries: Vec<(usize, usize, f64)>,
    rank_deficient: bool,
}

/// Sparse approximate inverse of a square symmetric `w` restricted to `pattern`.
///
/// Every column of `pattern` must be nonempty.
pub fn spai(w: &SparseMatrix, pattern: &SparsityPattern) -> Result<SpaiResult> {
    let n = w.rows();
    if !w.is_square() {
        return Err(Error::dims("spai", format!("{n}x{n}"), format!("{n}x{}", w.cols())));
    }
    if pattern.rows() != n || pattern.cols() != n {
        return Err(Error::dims(
            "spai",
            format!("{n}x{n} pattern"),
            format!("{}x{}", pattern.rows(), pattern.cols()),
        ));
    }
    // Column-oriented views: rows of the transposes.
    let by_column = pattern.transpose();
    if let Some(k) = (0..n).find(|&k| by_column.row(k).is_empty()) {
        return Err(Error::Precondition(format!("pattern column {k} is empty")));
    }
    let w_columns = w.transpose();

    let mut group_of: HashMap<&[usize], usize> = HashMap::new();
    let mut groups: Vec<ColumnGroup> = Vec::new();
    for k in 0..n {
        let allowed = by_column.row(k);
        let g = *group_of.entry(allowed).or_insert_with(|| {
            groups.push(ColumnGroup {
                allowed,
                columns: Vec::new(),
            });
            groups.len() - 1
        });
        groups[g].columns.push(k);
    }

    let solutions: Vec<GroupSolution> = groups
        .par_iter()
        .map(|g| solve_group(&w_columns, g))
        .collect();

    let mut rank_deficient = vec![false; n];
    let mut triplets = Vec::with_capacity(pattern.len());
    for (g, sol) in groups.iter().zip(solutions) {
        if sol.rank_deficient {
            for &k in &g.columns {
                rank_deficient[k] = true;
            }
        }
        triplets.extend(sol.entries.into_iter().map(|(k, r, v)| (r, k, v)));
    }
    let inverse = SparseMatrix::from_triplets(n, n, triplets)?;
    Ok(SpaiResult {
        inverse,
        rank_deficient,
    })
}

fn solve_group(w_columns: &SparseMatrix, group: &ColumnGroup) -> GroupSolution {
    let allowed = group.allowed;
    let mut touched: Vec<usize> = allowed
        .iter()
        .flat_map(|&j| w_columns.row(j).0.iter().copied())
        .collect();
    touched.sort_unstable();
    touched.dedup();

    let (m, p) = (touched.len(), allowed.len());
    let mut local = DMatrix::<f64>::zeros(m, p);
    for (jj, &j) in allowed.iter().enumerate() {
        let (rows, vals) = w_columns.row(j);
        for (&r, &v) in rows.iter().zip(vals) {
            let ii = touched.binary_search(&r).expect("row gathered above");
            local[(ii, jj)] = v;
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(m, group.columns.len());
    for (t, &k) in group.columns.iter().enumerate() {
        if let Ok(ii) = touched.binary_search(&k) {
            rhs[(ii, t)] = 1.0;
        }
    }

    let (solution, rank_deficient) = least_squares(local, rhs);

    let mut entries = Vec::with_capacity(p * group.columns.len());
    for (t, &k) in group.columns.iter().enumerate() {
        for (jj, &j) in allowed.iter().enumerate() {
            entries.push((k, j, solution[(jj, t)]));
        }
    }
    GroupSolution {
        entries,
        rank_deficient,
    }
}

/// Solves `min ||rhs - a x||` column-wise by Householder QR, falling back to
/// the SVD minimum-norm solution when `a` is numerically rank deficient.
fn least_squares(a: DMatrix<f64>, rhs: DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let (m, p) = a.shape();
    let eps_scale = m.max(p) as f64 * f64::EPSILON;
    if m >= p && p > 0 {
        let qr = a.clone().qr();
        let r = qr.r();
        let rmax = r.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let full_rank = rmax > 0.0 && r.diagonal().iter().all(|d| d.abs() > rmax * eps_scale);
        if full_rank {
            let mut qtb = rhs.clone();
            qr.q_tr_mul(&mut qtb);
            let top = qtb.rows(0, p).into_owned();
            if let Some(x) = r.solve_upper_triangular(&top) {
                if x.iter().all(|v| v.is_finite()) {
                    return (x, false);
                }
            }
        }
    }
    if m == 0 || p == 0 {
        return (DMatrix::zeros(p, rhs.ncols()), true);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |acc, v| acc.max(*v));
    let x = svd
        .solve(&rhs, smax * eps_scale)
        .unwrap_or_else(|_| DMatrix::zeros(p, rhs.ncols()));
    (x, true)
}

/// `||I - W X||_F`.
pub fn spai_residual(w: &SparseMatrix, x: &SparseMatrix) -> Result<f64> {
    let wx = super::spgemm(w, x)?;
    let n = wx.rows();
    let mut sum = 0.0;
    let mut diag_seen = vec![false; n];
    for (r, c, v) in wx.iter() {
        if r == c {
            diag_seen[r] = true;
            sum += (1.0 - v) * (1.0 - v);
        } else {
            sum += v * v;
        }
    }
    sum += diag_seen.iter().filter(|s| !**s).count() as f64;
    Ok(sum.sqrt())
}
