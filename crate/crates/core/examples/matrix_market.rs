//! Exporting a localized controller as Matrix Market files and reading it back.
//!
//! Usage: cargo run --release --example matrix_market [out_dir]

use localized_control::control::build_localized;
use localized_control::network::{gen_lattice, CouplingSpec, InputPreset, InputSpec};
use localized_control::scenario::network_problem;
use localized_control::sparse::read_matrix_market;

fn main() -> localized_control::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "out/controller".into());
    let g = gen_lattice(8, 8)?;
    let input = InputSpec::all_nodes(g.node_count(), 3, InputPreset::B2);
    let p = network_problem(&g, &CouplingSpec::new(3, 21), &input, 3, 22)?;
    let c = build_localized(&p, 2)?;
    c.export(&dir)?;
    for name in ["Q.mtx", "R.mtx"] {
        let m = read_matrix_market(std::path::Path::new(&dir).join(name))?;
        println!("{name}: {}x{}, {} entries, fill-in {:.1}%", m.rows(), m.cols(), m.nnz(), localized_control::sparse::fill_in(&m));
    }
    println!("SIN listing in {dir}/sins.txt");
    Ok(())
}
