//! Random and regular network generators.
//!
//! Usage: cargo run --release --example network_generation [seed]

use localized_control::network::{gen_ern, gen_lattice, gen_rgn, rgn_radius_for_degree, Graph};

fn describe(name: &str, g: &Graph) {
    let d = g.bfs_distances(0).expect("node 0 exists");
    println!(
        "{name:>18}: {:4} nodes, {:5} edges, mean degree {:.2}, eccentricity of node 0 = {}",
        g.node_count(),
        g.edge_count(),
        g.mean_degree(),
        d.iter().max().unwrap()
    );
}

fn main() -> localized_control::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(1), |s| s.parse()).expect("seed must be an integer");
    describe("lattice 35x35", &gen_lattice(35, 35)?);
    describe("ERN N=640 k=6", &gen_ern(640, 6.0, seed)?);
    describe("RGN N=750 k=8", &gen_rgn(750, rgn_radius_for_degree(750, 8.0), seed)?);
    describe("ERN N=150 k=4", &gen_ern(150, 4.0, seed)?);
    describe("RGN N=150 k=8", &gen_rgn(150, rgn_radius_for_degree(150, 8.0), seed)?);
    Ok(())
}
