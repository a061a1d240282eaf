//! Minimum-energy control: propagation, controllability matrices and
//! Gramians, the centralized controller and its localized approximation.

mod layout;
mod localized;
mod problem;

pub use layout::{permutation_map, InputSequence, NodeLayout, PermutationMap, SequenceOrder};
pub use localized::{
    apply_localized, build_localized, build_localized_with_pattern, effective_sins, Block,
    BlockRows, LocalizedController, SinViolations,
};
pub use problem::{
    apriori_pattern, centralized_control, control_error, controllability_index,
    controllability_matrix, gramian, gramian_report, node_major_controllability, propagate,
    ControlProblem, GramianReport, DEFAULT_CG_TOLERANCE, DENSE_RANK_LIMIT,
};

pub(crate) use problem::distance;
#[cfg(test)]
pub(crate) use problem::numerical_rank;

/// Threshold values used for effective neighbourhoods by default.
pub const DEFAULT_DELTAS: [f64; 3] = [0.0, 1e-6, 1e-3];

#[cfg(test)]
mod tests;
