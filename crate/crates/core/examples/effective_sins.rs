//! Shrinking state information neighbourhoods by dropping small gain blocks.
//!
//! Usage: cargo run --release --example effective_sins [side]

use localized_control::control::{build_localized, control_error, DEFAULT_DELTAS};
use localized_control::network::{gen_lattice, CouplingSpec, InputPreset, InputSpec};
use localized_control::scenario::network_problem;

fn main() -> localized_control::Result<()> {
    let side: usize = std::env::args().nth(1).map_or(Ok(15), |s| s.parse()).expect("side must be an integer");
    let g = gen_lattice(side, side)?;
    let n = 3;
    let input = InputSpec::all_nodes(g.node_count(), n, InputPreset::B1);
    let p = network_problem(&g, &CouplingSpec::new(n, 5), &input, 5, 6)?;
    let c = build_localized(&p, 3)?;
    let middle = g.node_count() / 2;
    for delta in DEFAULT_DELTAS.into_iter().chain([1e-2]) {
        let e = c.effective_sins(delta)?;
        let u = e.apply(&p.x0, &p.xd)?;
        let sizes = e.sin_sizes_desired();
        println!(
            "delta = {delta:.0e}: eps = {:.3e}, |N1| of middle node = {}, max |N1| = {}, max |N2| = {}",
            control_error(&p, &u)?,
            sizes[middle],
            sizes.iter().max().unwrap(),
            e.sin_sizes_initial().iter().max().unwrap()
        );
    }
    Ok(())
}
