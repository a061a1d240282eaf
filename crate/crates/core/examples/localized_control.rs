//! Localized versus centralized minimum-energy control on a random geometric network.
//!
//! Usage: cargo run --release --example localized_control [nodes] [f]

use localized_control::control::{apply_localized, build_localized, centralized_control, control_error};
use localized_control::network::{gen_rgn, rgn_radius_for_degree, CouplingSpec, InputPreset, InputSpec};
use localized_control::scenario::network_problem;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn main() -> localized_control::Result<()> {
    let mut args = std::env::args().skip(1);
    let nodes: usize = args.next().map_or(Ok(200), |s| s.parse()).expect("nodes must be an integer");
    let f: usize = args.next().map_or(Ok(3), |s| s.parse()).expect("f must be an integer");
    let g = gen_rgn(nodes, rgn_radius_for_degree(nodes, 8.0), 11)?;
    let n = 3;
    let input = InputSpec::all_nodes(g.node_count(), n, InputPreset::B1);
    let p = network_problem(&g, &CouplingSpec::new(n, 12), &input, f, 13)?;
    let exact = centralized_control(&p, 1e-12)?;
    println!(
        "RGN with {} nodes, f = {f}: centralized error {:.2e}, input norm {:.4}",
        g.node_count(),
        control_error(&p, &exact)?,
        norm(&exact.values)
    );
    for q in 0..=5 {
        let c = build_localized(&p, q)?;
        let u = apply_localized(&c, &p.x0, &p.xd)?;
        let diff: Vec<f64> = u.values.iter().zip(&exact.values).map(|(a, b)| a - b).collect();
        let sizes = c.sin_sizes_desired();
        println!(
            "q = {q}: eps = {:.3e}, ||u - u*|| / ||u*|| = {:.3e}, fill-in X {:.1}%, mean |N1| = {:.1}",
            control_error(&p, &u)?,
            norm(&diff) / norm(&exact.values),
            c.x_fill_in,
            sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
        );
    }
    Ok(())
}
