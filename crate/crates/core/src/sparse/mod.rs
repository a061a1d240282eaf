//! Sparse matrix storage and kernels.

mod cg;
mod eigen;
mod matrix;
mod mtx;
mod pattern;
mod radius;
mod spai;

pub use cg::cg_solve;
pub use eigen::{
    condition_number, extreme_eigenvalues, ConditionMode, SpectrumBounds, DENSE_EIGEN_LIMIT,
    ITERATIVE_TOLERANCE,
};
pub use matrix::SparseMatrix;
pub use mtx::{read_matrix_market, write_matrix_market};
pub use pattern::SparsityPattern;
pub use radius::{dense_spectral_radius, spectral_radius, DENSE_RADIUS_LIMIT};
pub use spai::{spai, spai_residual, SpaiResult};


use crate::error::{Error, Result};

/// Exact sparse product `a * b` (row-wise Gustavson). No entry is dropped,
/// even when it cancels to zero.
pub fn spgemm(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::dims(
            "spgemm",
            format!("{} rows on the right", a.cols()),
            b.rows(),
        ));
    }
    let n_out = b.cols();
    let mut marker = vec![usize::MAX; n_out];
    let mut acc = vec![0.0; n_out];
    let mut indptr = Vec::with_capacity(a.rows() + 1);
    let mut indices: Vec<usize> = Vec::with_capacity(a.nnz().max(b.nnz()));
    let mut values = Vec::with_capacity(a.nnz().max(b.nnz()));
    indptr.push(0);
    for r in 0..a.rows() {
        let start = indices.len();
        let (acols, avals) = a.row(r);
        for (&j, &av) in acols.iter().zip(avals) {
            let (bcols, bvals) = b.row(j);
            for (&k, &bv) in bcols.iter().zip(bvals) {
                if marker[k] != r {
                    marker[k] = r;
                    acc[k] = 0.0;
                    indices.push(k);
                }
                acc[k] += av * bv;
            }
        }
        indices[start..].sort_unstable();
        values.extend(indices[start..].iter().map(|&k| acc[k]));
        indptr.push(indices.len());
    }
    SparseMatrix::from_csr(a.rows(), n_out, indptr, indices, values)
}

/// Positions of stored entries, explicit zeros included.
pub fn pattern_of(m: &SparseMatrix) -> SparsityPattern {
    SparsityPattern::from(m)
}

pub fn pattern_union(p: &SparsityPattern, q: &SparsityPattern) -> Result<SparsityPattern> {
    p.union(q)
}

/// Percentage of entries that are stored and nonzero.
pub fn fill_in(m: &SparseMatrix) -> f64 {
    let total = m.rows() as f64 * m.cols() as f64;
    if total == 0.0 {
        return 0.0;
    }
    100.0 * m.count_nonzero() as f64 / total
}
