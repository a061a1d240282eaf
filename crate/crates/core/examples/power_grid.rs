//! Perturbation recovery on the bundled synthetic power grid.
//!
//! Usage: cargo run --release --example power_grid [f] [q] [seeds]

use localized_control::powergrid::{bundled_synthetic_grid, prepare_grid_control, GridSettings};

fn main() -> localized_control::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut next = |d: usize| args.next().map_or(Ok(d), |s| s.parse()).expect("arguments must be integers");
    let (f, q, seeds) = (next(5), next(3), next(10));
    let model = bundled_synthetic_grid()?;
    let setup = prepare_grid_control(
        &model,
        GridSettings {
            f,
            q,
            ..GridSettings::default()
        },
    )?;
    println!(
        "{} generators, {} buses, state dimension {}, f = {f}, q = {q}",
        model.generator_count(),
        model.bus_count(),
        model.state_dim()
    );
    for seed in 0..seeds as u64 {
        let r = setup.run(0.01, seed)?;
        println!(
            "seed {seed}: linear eps {:.2e}, nonlinear {:.2e}, uncontrolled {:.2e}",
            r.eps_linear, r.eps_nonlinear, r.uncontrolled
        );
    }
    for delta in [0.0, 1e-6, 1e-3] {
        let mut sizes = setup.controller.effective_sins(delta)?.sin_sizes_desired();
        sizes.sort_unstable();
        println!("delta = {delta:.0e}: median |N1| = {}", sizes[sizes.len() / 2]);
    }
    Ok(())
}
