//! Sparse approximate inverses of a banded SPD matrix on widening patterns.
//!
//! Usage: cargo run --release --example spai_banded [dim]

use localized_control::sparse::{spai, spai_residual, SparseMatrix, SparsityPattern};

fn main() -> localized_control::Result<()> {
    let dim: usize = std::env::args().nth(1).map_or(Ok(200), |s| s.parse()).expect("dim must be an integer");
    let mut t = Vec::new();
    for i in 0..dim {
        t.push((i, i, 4.0));
        for (off, v) in [(1, -1.5), (2, 0.5)] {
            if i + off < dim {
                t.push((i, i + off, v));
                t.push((i + off, i, v));
            }
        }
    }
    let w = SparseMatrix::from_triplets(dim, dim, t)?;
    for half in [0usize, 1, 2, 4, 8, 16] {
        let pattern = SparsityPattern::from_positions(
            dim,
            dim,
            (0..dim).flat_map(|i| (i.saturating_sub(half)..(i + half + 1).min(dim)).map(move |j| (i, j))),
        )?;
        let x = spai(&w, &pattern)?;
        println!(
            "half-width {half:2}: {:6} entries, ||I - W X||_F = {:.3e}, rank-deficient columns = {}",
            x.inverse.nnz(),
            spai_residual(&w, &x.inverse)?,
            x.rank_deficient_count()
        );
    }
    Ok(())
}
