//! Off-diagonal decay of the inverse Gramian on a lattice for the three
//! input presets, with an audit of the banded-SPD decay bound.
//!
//! Usage: cargo run --release --example decay_bound [side] [f]

use std::time::Instant;

use localized_control::decay::{binned_maxima, preset_localization};
use localized_control::network::{gen_lattice, CouplingSpec};

fn main() -> localized_control::Result<()> {
    let mut args = std::env::args().skip(1);
    let side: usize = args.next().map_or(Ok(20), |s| s.parse()).expect("side must be an integer");
    let f: usize = args.next().map_or(Ok(5), |s| s.parse()).expect("f must be an integer");
    let g = gen_lattice(side, side)?;
    let n = 3;
    let start = Instant::now();
    let reports = preset_localization(&g, &CouplingSpec::new(n, 1), f)?;
    println!("{side}x{side} lattice, n = {n}, f = {f} ({:.1} s)", start.elapsed().as_secs_f64());
    for (preset, r) in &reports {
        let bins = binned_maxima(&r.envelope, r.middle_row, n * side);
        println!(
            "{preset}: kappa = {:.3e}, fill-in = {:.2}%, beta = {}, lambda = {:.6}, violations = {}, entries >= 1e-12: {:.2}%",
            r.kappa,
            r.fill_in_percent,
            r.bound.beta,
            r.bound.lambda,
            r.violations.len(),
            100.0 * r.fraction_above(1e-12)
        );
        let shown: Vec<String> = bins.iter().take(8).map(|b| format!("{b:.1e}")).collect();
        println!("    middle-row maxima by lattice row offset: {}", shown.join(" "));
    }
    Ok(())
}
