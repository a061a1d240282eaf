//! Configured experiment runs: parameter sweeps over networks, presets,
//! horizons and localization levels, with CSV outputs, aggregation and plots.

mod config;
mod plot;
mod runner;
mod stats;

pub use config::{parse_config, validate_config, ExperimentConfig, ExperimentKind, NetworkKind};
pub use plot::{load_series, plot_csv, render_svg, PlotKind, PlotSpec, Series};
pub use runner::{
    build_network, build_problem, derive_seed, grid_model, grid_settings, run_experiment, splitmix64, streams,
    ExperimentOutput, RunRow,
};
pub use stats::{
    aggregate_header, aggregate_records, read_csv, run_header, summarize, verify_outputs, write_csv, Summary,
    Verification, KEY_COLUMNS, METRIC_COLUMNS,
};
