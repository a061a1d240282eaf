//! Network topologies, coupling matrices and input matrices.

mod coupling;
mod generate;
mod graph;
mod input;

pub use coupling::{build_coupling, CouplingSpec, DEFAULT_SPECTRAL_RADIUS};
pub use generate::{gen_ern, gen_lattice, gen_rgn, rgn_radius_for_degree, MIN_GIANT_FRACTION};
pub use graph::Graph;
pub use input::{build_input_matrix, InputPreset, InputSpec};

use crate::sparse::SparsityPattern;

/// Pattern of `(adjacency + I)` with every node expanded to an `n x n` block.
pub fn block_adjacency_pattern(g: &Graph, n: usize) -> SparsityPattern {
    let positions = (0..g.node_count()).flat_map(|i| {
        std::iter::once(i)
            .chain(g.neighbors(i).iter().copied())
            .flat_map(move |j| (0..n).flat_map(move |r| (0..n).map(move |c| (i * n + r, j * n + c))))
    });
    SparsityPattern::from_positions(g.node_count() * n, g.node_count() * n, positions)
        .expect("positions in range")
}
