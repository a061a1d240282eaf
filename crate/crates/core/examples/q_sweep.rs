//! A small q sweep through the experiment runner, printing the aggregate table.
//!
//! Usage: cargo run --release --example q_sweep [out_dir]

use localized_control::experiment::{run_experiment, ExperimentConfig, ExperimentKind, NetworkKind};

fn main() -> localized_control::Result<()> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::SweepQ);
    cfg.output = std::env::args().nth(1).map_or_else(|| "out/q_sweep".into(), Into::into);
    cfg.network = NetworkKind::Rgn;
    cfg.mean_degree = NetworkKind::Rgn.default_mean_degree();
    cfg.seeds = 5;
    cfg.q = (0..=5).collect();
    let out = run_experiment(&cfg, None)?;
    let header = localized_control::experiment::aggregate_header();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (q, eps, sin) = (col("q"), col("eps_median"), col("sin_q_mean_mean"));
    println!("q  median eps   mean |N1|");
    for row in &out.aggregate {
        println!("{:<2} {:<12.3e} {:.1}", row[q], row[eps].parse::<f64>().unwrap(), row[sin].parse::<f64>().unwrap());
    }
    println!("outputs in {}", out.dir.display());
    Ok(())
}
