use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{spectral_radius, SparseMatrix};

use super::Graph;

/// Spectral radius every generated coupling matrix is rescaled to by default.
pub const DEFAULT_SPECTRAL_RADIUS: f64 = 0.8;

/// Parameters of the random block coupling matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSpec {
    /// State dimension of each node.
    pub n: usize,
    pub weight_seed: u64,
    pub spectral_radius_target: f64,
}

impl CouplingSpec {
    pub fn new(n: usize, weight_seed: u64) -> Self {
        CouplingSpec {
            n,
            weight_seed,
            spectral_radius_target: DEFAULT_SPECTRAL_RADIUS,
        }
    }
}

/// Random block coupling matrix `A` over `g`.
///
/// Every edge carries two independently drawn dense `n x n` blocks (one per
/// orientation) and every node a dense diagonal block; entries are uniform on
/// `[-1, 1]`. The matrix is then scaled to the target spectral radius.
pub fn build_coupling(g: &Graph, spec: &CouplingSpec) -> Result<SparseMatrix> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::Precondition("state dimension n must be at least 1".into()));
    }
    if !(spec.spectral_radius_target.is_finite() && spec.spectral_radius_target > 0.0) {
        return Err(Error::Precondition("spectral radius target must be finite and positive".into()));
    }
    if !g.is_connected() {
        return Err(Error::Precondition("coupling requires a connected graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.weight_seed);
    let mut triplets = Vec::with_capacity((g.node_count() + 2 * g.edge_count()) * n * n);
    let mut block = |bi: usize, bj: usize, rng: &mut ChaCha8Rng| {
        for r in 0..n {
            for c in 0..n {
                triplets.push((bi * n + r, bj * n + c, rng.gen_range(-1.0..=1.0)));
            }
        }
    };
    for i in 0..g.node_count() {
        block(i, i, &mut rng);
    }
    for &(u, v) in g.edges() {
        block(u, v, &mut rng);
        block(v, u, &mut rng);
    }
    let dim = g.node_count() * n;
    let a = SparseMatrix::from_triplets(dim, dim, triplets)?;
    let rho = spectral_radius(&a)?;
    if !(rho > 0.0) {
        return Err(Error::Precondition("coupling matrix has zero spectral radius".into()));
    }
    Ok(a.scale(spec.spectral_radius_target / rho))
}
