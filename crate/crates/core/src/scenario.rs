//! Assembling control problems on generated networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::ControlProblem;
use crate::error::Result;
use crate::network::{build_coupling, build_input_matrix, CouplingSpec, Graph, InputSpec};

/// Network system with random initial and desired states drawn uniformly
/// from `[-1, 1]` using `state_seed`.
pub fn network_problem(
    g: &Graph,
    coupling: &CouplingSpec,
    input: &InputSpec,
    f: usize,
    state_seed: u64,
) -> Result<ControlProblem> {
    let a = build_coupling(g, coupling)?;
    let b = build_input_matrix(g.node_count(), coupling.n, input)?;
    let dim = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(state_seed);
    let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let xd: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ControlProblem::uniform(a, b, f, x0, xd, coupling.n, input.m)
}
