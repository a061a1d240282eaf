use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::control::{build_localized, control_error, gramian, ControlProblem, LocalizedController};
use crate::decay::{audit_bound, bandwidth, demko_bound, dense_inverse, ordered_magnitudes_dense, row_envelope, write_envelope_csv, write_ordered_csv, write_violations_csv, DENSE_INVERSE_LIMIT};
use crate::error::{Error, Result};
use crate::network::{gen_ern, gen_lattice, gen_rgn, rgn_radius_for_degree, CouplingSpec, Graph, InputPreset, InputSpec};
use crate::powergrid::{bundled_synthetic_grid, load_grid, prepare_grid_control, GridModel, GridSettings};
use crate::scenario::network_problem;
use crate::sparse::{condition_number, fill_in, ConditionMode};

use super::config::{ExperimentConfig, ExperimentKind, NetworkKind};
use super::stats::{aggregate_header, aggregate_records, run_header, write_csv, KEY_COLUMNS, METRIC_COLUMNS};

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for random stream `stream` of realization `index`:
/// `splitmix64(splitmix64(master ^ splitmix64(stream)) ^ index)`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)) ^ index)
}

/// Random streams of one realization.
pub mod streams {
    pub const NETWORK: u64 = 0;
    pub const WEIGHTS: u64 = 1;
    pub const STATES: u64 = 2;
    pub const SUBSET: u64 = 3;
    pub const PERTURBATION: u64 = 4;
}

/// One row of `runs.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub key: [String; 9],
    pub seed_index: usize,
    pub seed: u64,
    pub status: String,
    pub metrics: BTreeMap<&'static str, f64>,
}

impl RunRow {
    fn record(&self) -> Vec<String> {
        let mut r: Vec<String> = self.key.to_vec();
        r.push(self.seed_index.to_string());
        r.push(self.seed.to_string());
        r.push(self.status.clone());
        for m in METRIC_COLUMNS {
            r.push(self.metrics.get(m).map_or(String::new(), |v| v.to_string()));
        }
        r
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub rows: Vec<RunRow>,
    /// Aggregate rows as written to `aggregate.csv`.
    pub aggregate: Vec<Vec<String>>,
    /// Points (indices into `aggregate`) where every seed failed.
    pub failed_points: Vec<usize>,
}

struct Timing {
    sort_key: Vec<usize>,
    record: Vec<String>,
}

struct TaskResult {
    rows: Vec<(Vec<usize>, RunRow)>,
    timings: Vec<Timing>,
}

/// Runs every point and seed of `cfg`, writing `runs.csv`, `aggregate.csv`,
/// `timings.csv` and `config.txt` (plus kind-specific files) into `cfg.output`.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    fs::create_dir_all(&cfg.output)?;
    fs::write(cfg.output.join("config.txt"), cfg.to_text())?;

    let results: Vec<TaskResult> = pool.install(|| match cfg.kind {
        ExperimentKind::PowerGrid => grid_tasks(cfg),
        ExperimentKind::Decay => Ok(network_tasks(cfg).par_iter().map(|t| decay_task(cfg, t)).collect()),
        _ => Ok(network_tasks(cfg).par_iter().map(|t| control_task(cfg, t)).collect()),
    })?;

    let mut keyed: Vec<(Vec<usize>, RunRow)> = Vec::new();
    let mut timings: Vec<Timing> = Vec::new();
    for r in results {
        keyed.extend(r.rows);
        timings.extend(r.timings);
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    timings.sort_by(|a, b| a.sort_key.cmp(&b.sort_key));
    let rows: Vec<RunRow> = keyed.into_iter().map(|(_, r)| r).collect();

    let header: Vec<String> = run_header().iter().map(|s| s.to_string()).collect();
    let records: Vec<Vec<String>> = rows.iter().map(RunRow::record).collect();
    write_csv(cfg.output.join("runs.csv"), &header, &records)?;
    let aggregate = aggregate_records(&header, &records)?;
    write_csv(cfg.output.join("aggregate.csv"), &aggregate_header(), &aggregate)?;
    let mut t_header: Vec<&str> = KEY_COLUMNS.to_vec();
    t_header.extend(["seed_index", "build_seconds", "apply_seconds"]);
    write_csv(
        cfg.output.join("timings.csv"),
        &t_header,
        &timings.into_iter().map(|t| t.record).collect::<Vec<_>>(),
    )?;

    if cfg.kind == ExperimentKind::Localization || cfg.kind == ExperimentKind::Decay {
        write_localization_files(cfg)?;
    }

    let runs_col = KEY_COLUMNS.len();
    let failed_points = aggregate
        .iter()
        .enumerate()
        .filter(|(_, r)| r[runs_col] == r[runs_col + 1])
        .map(|(i, _)| i)
        .collect();
    Ok(ExperimentOutput {
        dir: cfg.output.clone(),
        rows,
        aggregate,
        failed_points,
    })
}

#[derive(Clone, Debug)]
struct NetworkTask {
    preset: (usize, InputPreset),
    nodes: (usize, usize),
    fraction: (usize, f64),
    f: (usize, usize),
    seed_index: usize,
}

fn network_tasks(cfg: &ExperimentConfig) -> Vec<NetworkTask> {
    let nodes: Vec<usize> = match cfg.network {
        NetworkKind::Lattice => vec![cfg.width * cfg.height],
        _ => cfg.nodes.clone(),
    };
    let fractions: Vec<f64> = if cfg.kind == ExperimentKind::Decay { vec![1.0] } else { cfg.fractions.clone() };
    let mut out = Vec::new();
    for (pi, &p) in cfg.presets.iter().enumerate() {
        for (ni, &n) in nodes.iter().enumerate() {
            for (ri, &r) in fractions.iter().enumerate() {
                for (fi, &f) in cfg.f.iter().enumerate() {
                    for s in 0..cfg.seeds {
                        out.push(NetworkTask {
                            preset: (pi, p),
                            nodes: (ni, n),
                            fraction: (ri, r),
                            f: (fi, f),
                            seed_index: s,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Network of realization `seed_index` with `nodes` requested nodes.
pub fn build_network(cfg: &ExperimentConfig, nodes: usize, seed_index: usize) -> Result<Graph> {
    let seed = derive_seed(cfg.master_seed, streams::NETWORK, seed_index as u64);
    match cfg.network {
        NetworkKind::Ern => gen_ern(nodes, cfg.mean_degree, seed),
        NetworkKind::Rgn => gen_rgn(nodes, rgn_radius_for_degree(nodes, cfg.mean_degree), seed),
        NetworkKind::Lattice => gen_lattice(cfg.width, cfg.height),
    }
}

/// Control problem of one realization; the network, weights and states
/// depend only on `seed_index` (and `nodes`), so points are compared on
/// identical systems. Controlled subsets are nested across fractions.
pub fn build_problem(
    cfg: &ExperimentConfig,
    g: &Graph,
    preset: InputPreset,
    fraction: f64,
    f: usize,
    seed_index: usize,
) -> Result<ControlProblem> {
    let idx = seed_index as u64;
    let coupling = CouplingSpec {
        n: cfg.n,
        weight_seed: derive_seed(cfg.master_seed, streams::WEIGHTS, idx),
        spectral_radius_target: cfg.spectral_radius,
    };
    let input = if fraction >= 1.0 {
        InputSpec::all_nodes(g.node_count(), cfg.m, preset)
    } else {
        InputSpec::random_fraction(
            g.node_count(),
            cfg.m,
            preset,
            fraction,
            derive_seed(cfg.master_seed, streams::SUBSET, idx),
        )
    };
    network_problem(g, &coupling, &input, f, derive_seed(cfg.master_seed, streams::STATES, idx))
}

fn key(cfg: &ExperimentConfig, preset: &str, nodes: usize, fraction: Option<f64>, f: usize, q: Option<usize>, delta: Option<f64>) -> [String; 9] {
    let network = match cfg.kind {
        ExperimentKind::PowerGrid => "grid".to_string(),
        _ => cfg.network.name().to_string(),
    };
    let input_map = if cfg.kind == ExperimentKind::PowerGrid { cfg.input_map.to_string() } else { String::new() };
    [
        cfg.kind.name().to_string(),
        network,
        preset.to_string(),
        nodes.to_string(),
        fraction.map_or(String::new(), |v| v.to_string()),
        f.to_string(),
        q.map_or(String::new(), |v| v.to_string()),
        delta.map_or(String::new(), |v| v.to_string()),
        input_map,
    ]
}

/// Condition number, `inf` for singular Gramians, `None` when the
/// iterative estimate does not converge.
fn kappa_of(w: &crate::sparse::SparseMatrix, mode: ConditionMode) -> Result<Option<f64>> {
    match condition_number(w, mode) {
        Ok(k) => Ok(Some(k)),
        Err(Error::NotPositiveDefinite { .. }) => Ok(Some(f64::INFINITY)),
        Err(Error::NoConvergence { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn sin_stats(sizes: &[usize]) -> (f64, f64, f64) {
    let mut s = sizes.to_vec();
    s.sort_unstable();
    let k = s.len().max(1);
    let mean = s.iter().sum::<usize>() as f64 / k as f64;
    let median = if s.is_empty() {
        0.0
    } else if s.len() % 2 == 1 {
        s[s.len() / 2] as f64
    } else {
        0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2]) as f64
    };
    (mean, median, s.last().copied().unwrap_or(0) as f64)
}

fn controller_metrics(c: &LocalizedController, into: &mut BTreeMap<&'static str, f64>) {
    into.insert("fill_x", c.x_fill_in);
    into.insert("fill_q", c.q_fill_in());
    into.insert("fill_r", c.r_fill_in());
    into.insert("rank_deficient", c.rank_deficient_columns as f64);
    let (a, b, m) = sin_stats(&c.sin_sizes_desired());
    into.insert("sin_q_mean", a);
    into.insert("sin_q_median", b);
    into.insert("sin_q_max", m);
    let (a, b, m) = sin_stats(&c.sin_sizes_initial());
    into.insert("sin_r_mean", a);
    into.insert("sin_r_median", b);
    into.insert("sin_r_max", m);
}

fn control_task(cfg: &ExperimentConfig, t: &NetworkTask) -> TaskResult {
    let seed = derive_seed(cfg.master_seed, streams::NETWORK, t.seed_index as u64);
    let preset = t.preset.1.to_string();
    let sort = |qi: usize, di: usize| vec![t.preset.0, t.nodes.0, t.fraction.0, t.f.0, qi, di, t.seed_index];
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let outcome = (|| -> Result<()> {
        let g = build_network(cfg, t.nodes.1, t.seed_index)?;
        let p = build_problem(cfg, &g, t.preset.1, t.fraction.1, t.f.1, t.seed_index)?;
        let w = gramian(&p)?;
        let mut base = BTreeMap::new();
        base.insert("nodes", g.node_count() as f64);
        base.insert("dim", p.state_dim() as f64);
        base.insert("fill_w", fill_in(&w));
        if let Some(k) = kappa_of(&w, cfg.condition)? {
            base.insert("kappa", k);
        }
        for (qi, &q) in cfg.q.iter().enumerate() {
            let start = Instant::now();
            let c = build_localized(&p, q)?;
            let build = start.elapsed().as_secs_f64();
            let mut per_q = base.clone();
            controller_metrics(&c, &mut per_q);
            let mut apply_time = 0.0;
            for (di, &delta) in cfg.deltas.iter().enumerate() {
                let ce = c.effective_sins(delta)?;
                let start = Instant::now();
                let u = ce.apply(&p.x0, &p.xd)?;
                apply_time += start.elapsed().as_secs_f64();
                let mut m = per_q.clone();
                m.insert("eps", control_error(&p, &u)?);
                let (a, b, mx) = sin_stats(&ce.sin_sizes_desired());
                m.insert("sin_q_mean", a);
                m.insert("sin_q_median", b);
                m.insert("sin_q_max", mx);
                let (a, b, mx) = sin_stats(&ce.sin_sizes_initial());
                m.insert("sin_r_mean", a);
                m.insert("sin_r_median", b);
                m.insert("sin_r_max", mx);
                rows.push((
                    sort(qi, di),
                    RunRow {
                        key: key(cfg, &preset, t.nodes.1, Some(t.fraction.1), t.f.1, Some(q), Some(delta)),
                        seed_index: t.seed_index,
                        seed,
                        status: "ok".into(),
                        metrics: m,
                    },
                ));
            }
            let mut rec: Vec<String> = key(cfg, &preset, t.nodes.1, Some(t.fraction.1), t.f.1, Some(q), None).to_vec();
            rec.extend([t.seed_index.to_string(), build.to_string(), apply_time.to_string()]);
            timings.push(Timing {
                sort_key: sort(qi, 0),
                record: rec,
            });
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        // Rows already produced for earlier q stay; the rest record the error.
        for (qi, &q) in cfg.q.iter().enumerate() {
            for (di, &delta) in cfg.deltas.iter().enumerate() {
                let k = sort(qi, di);
                if rows.iter().any(|(sk, _)| *sk == k) {
                    continue;
                }
                rows.push((
                    k,
                    RunRow {
                        key: key(cfg, &preset, t.nodes.1, Some(t.fraction.1), t.f.1, Some(q), Some(delta)),
                        seed_index: t.seed_index,
                        seed,
                        status: format!("error: {e}"),
                        metrics: BTreeMap::new(),
                    },
                ));
            }
        }
    }
    TaskResult { rows, timings }
}

fn decay_task(cfg: &ExperimentConfig, t: &NetworkTask) -> TaskResult {
    let seed = derive_seed(cfg.master_seed, streams::NETWORK, t.seed_index as u64);
    let row_key = key(cfg, &t.preset.1.to_string(), t.nodes.1, None, t.f.1, None, None);
    let outcome = (|| -> Result<BTreeMap<&'static str, f64>> {
        let g = build_network(cfg, t.nodes.1, t.seed_index)?;
        let p = build_problem(cfg, &g, t.preset.1, 1.0, t.f.1, t.seed_index)?;
        let w = gramian(&p)?;
        let bound = demko_bound(&w, ConditionMode::Exact)?;
        let inv = dense_inverse(&w)?;
        let mut m = BTreeMap::new();
        m.insert("nodes", g.node_count() as f64);
        m.insert("dim", p.state_dim() as f64);
        m.insert("fill_w", fill_in(&w));
        m.insert("kappa", bound.kappa);
        m.insert("bandwidth", bandwidth(&w) as f64);
        m.insert("lambda", bound.lambda);
        m.insert("violations", audit_bound(&inv, &bound).len() as f64);
        Ok(m)
    })();
    let (status, metrics) = match outcome {
        Ok(m) => ("ok".to_string(), m),
        Err(e) => (format!("error: {e}"), BTreeMap::new()),
    };
    TaskResult {
        rows: vec![(
            vec![t.preset.0, t.nodes.0, 0, t.f.0, 0, 0, t.seed_index],
            RunRow {
                key: row_key,
                seed_index: t.seed_index,
                seed,
                status,
                metrics,
            },
        )],
        timings: Vec::new(),
    }
}

/// Grid from `cfg.grid_file` or the bundled synthetic grid.
pub fn grid_model(cfg: &ExperimentConfig) -> Result<GridModel> {
    match &cfg.grid_file {
        Some(p) => load_grid(p),
        None => bundled_synthetic_grid(),
    }
}

pub fn grid_settings(cfg: &ExperimentConfig, f: usize, q: usize) -> GridSettings {
    GridSettings {
        f,
        q,
        h: cfg.h,
        substeps: cfg.substeps,
        input_map: cfg.input_map,
        drop_tolerance: cfg.drop_tolerance,
        damping_scale: cfg.damping_scale,
        ..GridSettings::default()
    }
}

fn grid_tasks(cfg: &ExperimentConfig) -> Result<Vec<TaskResult>> {
    let model = grid_model(cfg)?;
    let mut points = Vec::new();
    for (fi, &f) in cfg.f.iter().enumerate() {
        for (qi, &q) in cfg.q.iter().enumerate() {
            points.push((fi, f, qi, q));
        }
    }
    Ok(points
        .par_iter()
        .map(|&(fi, f, qi, q)| grid_point(cfg, &model, fi, f, qi, q))
        .collect())
}

fn grid_point(cfg: &ExperimentConfig, model: &GridModel, fi: usize, f: usize, qi: usize, q: usize) -> TaskResult {
    let preset = "identity";
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let start = Instant::now();
    let setup = prepare_grid_control(model, grid_settings(cfg, f, q));
    let build = start.elapsed().as_secs_f64();
    for seed_index in 0..cfg.seeds {
        let seed = derive_seed(cfg.master_seed, streams::PERTURBATION, seed_index as u64);
        for (di, &delta) in cfg.deltas.iter().enumerate() {
            let row_key = key(cfg, preset, model.node_count(), None, f, Some(q), Some(delta));
            let outcome = setup.as_ref().map_err(|e| e.to_string()).and_then(|s| {
                (|| -> Result<BTreeMap<&'static str, f64>> {
                    let mut m = BTreeMap::new();
                    let mut s = s.clone();
                    controller_metrics(&s.controller, &mut m);
                    s.controller = s.controller.effective_sins(delta)?;
                    let (a, b, mx) = sin_stats(&s.controller.sin_sizes_desired());
                    m.insert("sin_q_mean", a);
                    m.insert("sin_q_median", b);
                    m.insert("sin_q_max", mx);
                    let (a, b, mx) = sin_stats(&s.controller.sin_sizes_initial());
                    m.insert("sin_r_mean", a);
                    m.insert("sin_r_median", b);
                    m.insert("sin_r_max", mx);
                    let run = s.run(cfg.perturb, seed)?;
                    m.insert("nodes", model.node_count() as f64);
                    m.insert("dim", model.state_dim() as f64);
                    m.insert("eps", run.eps_linear);
                    m.insert("eps_nonlinear", run.eps_nonlinear);
                    m.insert("uncontrolled", run.uncontrolled);
                    Ok(m)
                })()
                .map_err(|e| e.to_string())
            });
            let (status, metrics) = match outcome {
                Ok(m) => ("ok".to_string(), m),
                Err(e) => (format!("error: {e}"), BTreeMap::new()),
            };
            rows.push((
                vec![0, 0, 0, fi, qi, di, seed_index],
                RunRow {
                    key: row_key,
                    seed_index,
                    seed,
                    status,
                    metrics,
                },
            ));
        }
    }
    let mut rec: Vec<String> = key(cfg, preset, model.node_count(), None, f, Some(q), None).to_vec();
    rec.extend([String::new(), build.to_string(), String::new()]);
    timings.push(Timing {
        sort_key: vec![0, 0, 0, fi, qi, 0, 0],
        record: rec,
    });
    TaskResult { rows, timings }
}

/// Ordered magnitudes, middle-row envelopes and SIN listings for
/// realization 0 of every preset and horizon (dense path only).
fn write_localization_files(cfg: &ExperimentConfig) -> Result<()> {
    let nodes = match cfg.network {
        NetworkKind::Lattice => cfg.width * cfg.height,
        _ => cfg.nodes[0],
    };
    let g = build_network(cfg, nodes, 0)?;
    for &preset in &cfg.presets {
        for &f in &cfg.f {
            let p = build_problem(cfg, &g, preset, 1.0, f, 0)?;
            if p.state_dim() <= DENSE_INVERSE_LIMIT {
                let w = gramian(&p)?;
                if let Ok(inv) = dense_inverse(&w) {
                    let stem = format!("{preset}_f{f}");
                    write_ordered_csv(cfg.output.join(format!("ordered_{stem}.csv")), &ordered_magnitudes_dense(&inv))?;
                    let row = p.state_dim() / 2;
                    write_envelope_csv(cfg.output.join(format!("envelope_{stem}.csv")), &row_envelope(&inv, row)?)?;
                    if cfg.kind == ExperimentKind::Decay {
                        let bound = demko_bound(&w, ConditionMode::Exact)?;
                        write_violations_csv(cfg.output.join(format!("violations_{stem}.csv")), &audit_bound(&inv, &bound))?;
                    }
                }
            }
            if cfg.kind == ExperimentKind::Localization {
                for &q in &cfg.q {
                    let c = build_localized(&p, q)?;
                    for &delta in &cfg.deltas {
                        let listing = c.effective_sins(delta)?.sin_listing();
                        write_text(&cfg.output.join(format!("sins_{preset}_f{f}_q{q}_delta{delta:e}.txt")), &listing)?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}
