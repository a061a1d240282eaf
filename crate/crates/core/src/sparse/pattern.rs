use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::SparseMatrix;

/// Set of `(row, col)` positions, stored row-compressed with sorted columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

impl SparsityPattern {
    pub fn empty(rows: usize, cols: usize) -> Self {
        SparsityPattern {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparsityPattern {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
        }
    }

    /// Every position of a `rows x cols` matrix.
    pub fn full(rows: usize, cols: usize) -> Self {
        SparsityPattern {
            rows,
            cols,
            indptr: (0..=rows).map(|r| r * cols).collect(),
            indices: (0..rows).flat_map(|_| 0..cols).collect(),
        }
    }

    pub fn from_positions<I>(rows: usize, cols: usize, positions: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let set: BTreeSet<(usize, usize)> = positions.into_iter().collect();
        if let Some(&(r, c)) = set.iter().find(|&&(r, c)| r >= rows || c >= cols) {
            return Err(Error::Precondition(format!(
                "position ({r}, {c}) outside a {rows}x{cols} pattern"
            )));
        }
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(set.len());
        for (r, c) in set {
            indptr[r + 1] += 1;
            indices.push(c);
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(SparsityPattern {
            rows,
            cols,
            indptr,
            indices,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.indices[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        r < self.rows && self.row(r).binary_search(&c).is_ok()
    }

    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).iter().map(move |&c| (r, c)))
    }

    pub fn transpose(&self) -> SparsityPattern {
        let mut indptr = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            indptr[c + 1] += 1;
        }
        for c in 0..self.cols {
            indptr[c + 1] += indptr[c];
        }
        let mut next = indptr.clone();
        let mut indices = vec![0usize; self.len()];
        for (r, c) in self.positions() {
            indices[next[c]] = r;
            next[c] += 1;
        }
        SparsityPattern {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
        }
    }

    pub fn union(&self, other: &SparsityPattern) -> Result<SparsityPattern> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::dims(
                "pattern_union",
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        let mut indptr = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::with_capacity(self.len().max(other.len()));
        indptr.push(0);
        for r in 0..self.rows {
            let (a, b) = (self.row(r), other.row(r));
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                if j >= b.len() || (i < a.len() && a[i] < b[j]) {
                    indices.push(a[i]);
                    i += 1;
                } else if i >= a.len() || b[j] < a[i] {
                    indices.push(b[j]);
                    j += 1;
                } else {
                    indices.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
            indptr.push(indices.len());
        }
        Ok(SparsityPattern {
            rows: self.rows,
            cols: self.cols,
            indptr,
            indices,
        })
    }

    /// Structural product: `(i, k)` is set when some `j` has `(i, j)` in `self`
    /// and `(j, k)` in `other`. Numeric cancellation cannot remove positions.
    pub fn product(&self, other: &SparsityPattern) -> Result<SparsityPattern> {
        if self.cols != other.rows {
            return Err(Error::dims("pattern product", self.cols, other.rows));
        }
        let mut marker = vec![usize::MAX; other.cols];
        let mut indptr = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for r in 0..self.rows {
            let start = indices.len();
            for &j in self.row(r) {
                for &k in other.row(j) {
                    if marker[k] != r {
                        marker[k] = r;
                        indices.push(k);
                    }
                }
            }
            indices[start..].sort_unstable();
            indptr.push(indices.len());
        }
        Ok(SparsityPattern {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
        })
    }

    /// Fraction of positions occupied, in percent.
    pub fn density_percent(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        100.0 * self.len() as f64 / (self.rows as f64 * self.cols as f64)
    }
}

impl From<&SparseMatrix> for SparsityPattern {
    fn from(m: &SparseMatrix) -> Self {
        SparsityPattern {
            rows: m.rows(),
            cols: m.cols(),
            indptr: m.indptr().to_vec(),
            indices: m.indices().to_vec(),
        }
    }
}
