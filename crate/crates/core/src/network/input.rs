use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Diagonal 0/1 input block shared by every controlled node.
///
/// For `n = m = 3`: `B1 = diag(1,1,1)`, `B2 = diag(1,1,0)`,
/// `B3 = diag(1,0,0)`. In general preset `Bk` actuates the first
/// `min(n, m) - (k - 1)` local channels (at least one).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputPreset {
    B1,
    B2,
    B3,
}

impl InputPreset {
    pub const ALL: [InputPreset; 3] = [InputPreset::B1, InputPreset::B2, InputPreset::B3];

    pub fn actuated_channels(self, n: usize, m: usize) -> usize {
        let drop = match self {
            InputPreset::B1 => 0,
            InputPreset::B2 => 1,
            InputPreset::B3 => 2,
        };
        n.min(m).saturating_sub(drop).max(1).min(n.min(m))
    }
}

impl fmt::Display for InputPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InputPreset::B1 => "B1",
            InputPreset::B2 => "B2",
            InputPreset::B3 => "B3",
        };
        f.write_str(s)
    }
}

impl FromStr for InputPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "B1" => Ok(InputPreset::B1),
            "B2" => Ok(InputPreset::B2),
            "B3" => Ok(InputPreset::B3),
            other => Err(Error::validation("input preset", format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputSpec {
    /// Input dimension of each node.
    pub m: usize,
    pub preset: InputPreset,
    /// Sorted node indices that receive the preset block; all others get zeros.
    pub controlled_nodes: Vec<usize>,
}

impl InputSpec {
    pub fn all_nodes(node_count: usize, m: usize, preset: InputPreset) -> Self {
        InputSpec {
            m,
            preset,
            controlled_nodes: (0..node_count).collect(),
        }
    }

    /// Controls the first `ceil(fraction * N)` nodes of a seeded random
    /// permutation, so larger fractions of the same seed give supersets.
    pub fn random_fraction(node_count: usize, m: usize, preset: InputPreset, fraction: f64, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..node_count).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let count = ((fraction.clamp(0.0, 1.0) * node_count as f64).ceil() as usize).min(node_count);
        let mut controlled = order[..count].to_vec();
        controlled.sort_unstable();
        InputSpec {
            m,
            preset,
            controlled_nodes: controlled,
        }
    }
}

/// Block-diagonal `Nn x Nm` input matrix.
pub fn build_input_matrix(node_count: usize, n: usize, spec: &InputSpec) -> Result<SparseMatrix> {
    let m = spec.m;
    if let Some(&bad) = spec.controlled_nodes.iter().find(|&&i| i >= node_count) {
        return Err(Error::Precondition(format!(
            "controlled node {bad} outside {node_count} nodes"
        )));
    }
    let channels = spec.preset.actuated_channels(n, m);
    let triplets = spec
        .controlled_nodes
        .iter()
        .flat_map(|&i| (0..channels).map(move |c| (i * n + c, i * m + c, 1.0)));
    SparseMatrix::from_triplets(node_count * n, node_count * m, triplets)
}
