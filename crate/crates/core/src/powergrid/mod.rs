//! Power-grid synchronization: swing-equation model, equilibrium,
//! linearization, zero-order-hold discretization, nonlinear simulation and
//! localized control of perturbations.

mod dynamics;
mod experiment;
mod model;
mod synthetic;

pub use dynamics::{
    discretize, input_matrix, linearize, power_mismatch, simulate_nonlinear, solve_equilibrium, swing_rhs,
    weighted_laplacian, write_trajectory_csv, zoh, DiscreteGrid, GridState, LinearizedGrid, DEFAULT_DROP_TOLERANCE,
    DENSE_EXP_LIMIT,
};
pub use experiment::{grid_control_experiment, prepare_grid_control, GridRun, GridSettings, GridSetup};
pub use model::{load_grid, BALANCE_TOLERANCE, parse_grid, Bus, Generator, GridModel, InputMap, Line};
pub use synthetic::{synthetic_grid, MAX_LINE_ANGLE, SYNTHETIC_SEED};

/// The bundled synthetic grid (35 generators, 189 buses).
pub const SYNTHETIC_GRID: &str = include_str!("../../data/synthetic_35g_189b.grid");

/// The bundled two-node grid (one generator, one bus, one line).
pub const TWO_NODE_GRID: &str = include_str!("../../data/two_node.grid");

/// Parses [`SYNTHETIC_GRID`].
pub fn bundled_synthetic_grid() -> crate::Result<GridModel> {
    parse_grid(SYNTHETIC_GRID, std::path::Path::new("synthetic_35g_189b.grid"))
}
