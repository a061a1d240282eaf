use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use localized_control::control::InputSequence;
use localized_control::experiment::{
    build_network, build_problem, derive_seed, grid_model, grid_settings, plot_csv, run_experiment, streams,
    validate_config, verify_outputs, ExperimentConfig, ExperimentKind, NetworkKind, PlotKind, PlotSpec,
};
use localized_control::powergrid::{prepare_grid_control, synthetic_grid, write_trajectory_csv, InputMap};
use localized_control::sparse::write_matrix_market;
use localized_control::{Error, Result};

#[derive(Parser)]
#[command(name = "locctl", version, about = "Localized minimum-energy network control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network and its coupling and input matrices.
    GenNet(GenNetArgs),
    /// Run a configured experiment.
    Run(RunArgs),
    /// Plot a CSV output as SVG.
    Plot(PlotArgs),
    /// Recompute aggregate.csv from runs.csv and compare.
    Verify(VerifyArgs),
    /// Power-grid perturbation recovery, or synthetic grid generation.
    Grid(GridArgs),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Master seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenNetArgs {
    #[command(flatten)]
    common: Common,
    /// ern, rgn or lattice.
    #[arg(long)]
    network: Option<NetworkKind>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    degree: Option<f64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Realization index.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Horizon used only to size the input preset.
    #[arg(long, default_value_t = 1)]
    f: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    common: Common,
    /// CSV file to plot.
    input: PathBuf,
    /// ordered, envelope or sweep.
    #[arg(long, default_value = "sweep")]
    kind: PlotKind,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    /// Column splitting rows into lines; empty for none.
    #[arg(long)]
    series: Option<String>,
    /// Linear instead of logarithmic y axis.
    #[arg(long)]
    linear: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory of a run (alternative to --out).
    dir: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: Common,
    /// Grid file (default: bundled synthetic grid).
    #[arg(long)]
    grid_file: Option<PathBuf>,
    /// Write a synthetic grid with this many generators and buses instead.
    #[arg(long, num_args = 2, value_names = ["GENERATORS", "BUSES"])]
    synthetic: Option<Vec<usize>>,
    #[arg(long)]
    f: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    perturb: Option<f64>,
    /// all or generators.
    #[arg(long)]
    input_map: Option<InputMap>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::GenNet(a) => gen_net(a),
        Command::Run(a) => run(a),
        Command::Plot(a) => plot(a),
        Command::Verify(a) => verify(a),
        Command::Grid(a) => grid(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Validation { .. } => 1,
        _ => 2,
    }
}

fn load_config(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => validate_config(p)?,
        None => ExperimentConfig::new(kind),
    };
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn required_out(common: &Common) -> Result<&Path> {
    common
        .out
        .as_deref()
        .ok_or_else(|| Error::validation("arguments", "--out is required"))
}

fn gen_net(a: GenNetArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.common, ExperimentKind::Localization)?;
    if let Some(n) = a.network {
        cfg.network = n;
    }
    if let Some(n) = a.nodes {
        cfg.nodes = vec![n];
    }
    if let Some(k) = a.degree {
        cfg.mean_degree = k;
    }
    if let Some(w) = a.width {
        cfg.width = w;
    }
    if let Some(h) = a.height {
        cfg.height = h;
    }
    cfg.f = vec![a.f];
    cfg.validate()?;
    let out = a.common.out.clone().unwrap_or(cfg.output.clone());
    std::fs::create_dir_all(&out)?;
    let nodes = if cfg.network == NetworkKind::Lattice { cfg.width * cfg.height } else { cfg.nodes[0] };
    let g = build_network(&cfg, nodes, a.index)?;
    let p = build_problem(&cfg, &g, cfg.presets[0], cfg.fractions[0], a.f, a.index)?;
    g.write_edge_list(out.join("network.edges"))?;
    write_matrix_market(out.join("A.mtx"), &p.a)?;
    write_matrix_market(out.join("B.mtx"), &p.b)?;
    println!(
        "{} nodes, {} edges, mean degree {:.3}, state dimension {} -> {}",
        g.node_count(),
        g.edge_count(),
        g.mean_degree(),
        p.state_dim(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run(a: RunArgs) -> Result<ExitCode> {
    if a.common.config.is_none() {
        return Err(Error::validation("arguments", "--config is required"));
    }
    let cfg = load_config(&a.common, ExperimentKind::Localization)?;
    let out = run_experiment(&cfg, a.common.threads)?;
    let failed = out.rows.iter().filter(|r| !r.is_ok()).count();
    println!(
        "{} runs ({} failed), {} points -> {}",
        out.rows.len(),
        failed,
        out.aggregate.len(),
        out.dir.display()
    );
    if out.failed_points.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} points failed in every run", out.failed_points.len());
        Ok(ExitCode::from(2))
    }
}

fn plot(a: PlotArgs) -> Result<ExitCode> {
    let mut spec = PlotSpec::for_kind(a.kind);
    if let Some(x) = a.x {
        spec.x = x;
    }
    if let Some(y) = a.y {
        spec.y = y;
    }
    if let Some(s) = a.series {
        spec.series = if s.is_empty() { None } else { Some(s) };
    }
    if a.linear {
        spec.log_y = false;
    }
    spec.title = a.input.file_stem().map_or(spec.title, |s| s.to_string_lossy().into_owned());
    let out = a
        .common
        .out
        .clone()
        .unwrap_or_else(|| a.input.with_extension("svg"));
    plot_csv(&a.input, &out, &spec)?;
    println!("{}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let dir = match (a.dir, &a.common.out, &a.common.config) {
        (Some(d), _, _) => d,
        (None, Some(d), _) => d.clone(),
        (None, None, Some(c)) => validate_config(c)?.output,
        _ => return Err(Error::validation("arguments", "give a run directory or --out")),
    };
    let v = verify_outputs(&dir)?;
    if v.is_ok() {
        println!("{} points verified", v.points);
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} of {} points differ: {:?}", v.mismatches.len(), v.points, v.mismatches);
        Ok(ExitCode::from(1))
    }
}

fn grid(a: GridArgs) -> Result<ExitCode> {
    if let Some(sizes) = &a.synthetic {
        let out = required_out(&a.common)?;
        let seed = a.common.seed.unwrap_or(localized_control::powergrid::SYNTHETIC_SEED);
        let model = synthetic_grid(sizes[0], sizes[1], seed)?;
        model.write(out)?;
        println!("{} nodes, {} lines -> {}", model.node_count(), model.lines.len(), out.display());
        return Ok(ExitCode::SUCCESS);
    }
    let mut cfg = load_config(&a.common, ExperimentKind::PowerGrid)?;
    if let Some(p) = a.grid_file {
        cfg.grid_file = Some(p);
    }
    if let Some(f) = a.f {
        cfg.f = vec![f];
    }
    if let Some(q) = a.q {
        cfg.q = vec![q];
    }
    if let Some(p) = a.perturb {
        cfg.perturb = p;
    }
    if let Some(m) = a.input_map {
        cfg.input_map = m;
    }
    cfg.validate()?;
    let model = grid_model(&cfg)?;
    let setup = prepare_grid_control(&model, grid_settings(&cfg, cfg.f[0], cfg.q[0]))?;
    let seed = derive_seed(cfg.master_seed, streams::PERTURBATION, 0);
    let deviation = setup.perturbation(cfg.perturb, seed);
    let run = setup.run_deviation(&deviation)?;
    let zero = vec![0.0; deviation.len()];
    let u = setup.controller.apply(&deviation, &zero)?;
    let idle = InputSequence::zeros(u.values.len(), u.order);
    std::fs::create_dir_all(&cfg.output)?;
    let h = setup.settings.h;
    write_trajectory_csv(cfg.output.join("controlled.csv"), &setup.trajectory(&deviation, &u)?, h)?;
    write_trajectory_csv(cfg.output.join("uncontrolled.csv"), &setup.trajectory(&deviation, &idle)?, h)?;
    std::fs::write(cfg.output.join("sins.txt"), setup.controller.sin_listing())?;
    println!(
        "eps_linear {:.3e}  eps_nonlinear {:.3e}  uncontrolled {:.3e} -> {}",
        run.eps_linear,
        run.eps_nonlinear,
        run.uncontrolled,
        cfg.output.display()
    );
    Ok(ExitCode::SUCCESS)
}
