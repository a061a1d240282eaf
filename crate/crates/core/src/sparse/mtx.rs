//! Matrix Market coordinate format (1-based indices).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::SparseMatrix;

pub const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Writes every stored entry, explicit zeros included.
pub fn write_matrix_market(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (r, c, v) in m.iter() {
        writeln!(out, "{} {} {:e}", r + 1, c + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `general` or `symmetric` real coordinate files. Symmetric files are
/// expanded to both triangles. Duplicate entries are rejected.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (_, banner) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let fields: Vec<String> = banner.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(err(1, format!("unrecognized header {banner:?}")));
    }
    if fields[2] != "coordinate" || fields[3] != "real" {
        return Err(err(1, format!("unsupported format {} {}", fields[2], fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = body.next().ok_or_else(|| err(2, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(size_line, format!("bad size line: {e}")))?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(err(size_line, "size line needs rows cols nnz".into()));
    };

    let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    let mut count = 0;
    for (lineno, line) in body {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(err(lineno, "expected `row col value`".into()));
        }
        let r: usize = toks[0].parse().map_err(|e| err(lineno, format!("row: {e}")))?;
        let c: usize = toks[1].parse().map_err(|e| err(lineno, format!("col: {e}")))?;
        let v: f64 = toks[2].parse().map_err(|e| err(lineno, format!("value: {e}")))?;
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(err(lineno, format!("index ({r}, {c}) out of range")));
        }
        triplets.push((r - 1, c - 1, v, lineno));
        if symmetric && r != c {
            triplets.push((c - 1, r - 1, v, lineno));
        }
        count += 1;
    }
    if count != nnz {
        return Err(err(size_line, format!("declared {nnz} entries, found {count}")));
    }
    triplets.sort_by_key(|t| (t.0, t.1));
    if let Some(w) = triplets.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
        return Err(err(w[1].3, format!("duplicate entry ({}, {})", w[1].0 + 1, w[1].1 + 1)));
    }
    SparseMatrix::from_triplets(rows, cols, triplets.into_iter().map(|(r, c, v, _)| (r, c, v)))
}
