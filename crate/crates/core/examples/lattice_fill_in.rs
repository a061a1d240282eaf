//! Sparsity of the controllability Gramian on a square lattice.
//!
//! Usage: cargo run --release --example lattice_fill_in [side] [f]

use std::time::Instant;

use localized_control::control::gramian;
use localized_control::network::{gen_lattice, CouplingSpec, InputPreset, InputSpec};
use localized_control::scenario::network_problem;
use localized_control::sparse::fill_in;

fn main() -> localized_control::Result<()> {
    let mut args = std::env::args().skip(1);
    let side: usize = args.next().map_or(Ok(35), |s| s.parse()).expect("side must be an integer");
    let f: usize = args.next().map_or(Ok(5), |s| s.parse()).expect("f must be an integer");
    let g = gen_lattice(side, side)?;
    let n = 3;
    let input = InputSpec::all_nodes(g.node_count(), n, InputPreset::B1);
    let p = network_problem(&g, &CouplingSpec::new(n, 1), &input, f, 2)?;
    let start = Instant::now();
    for h in 1..=f {
        let mut ph = p.clone();
        ph.f = h;
        let w = gramian(&ph)?;
        println!(
            "f = {h}: W is {}x{}, {} stored entries, fill-in {:.2}%",
            w.rows(),
            w.cols(),
            w.nnz(),
            fill_in(&w)
        );
    }
    println!("{:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}
