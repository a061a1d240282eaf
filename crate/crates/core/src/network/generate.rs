use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::Graph;

/// A generated giant component must hold at least this fraction of the
/// requested nodes; anything smaller is reported as an error.
pub const MIN_GIANT_FRACTION: f64 = 0.1;

/// `width x height` grid with 4-neighbour coupling and open boundaries.
/// Node `(x, y)` gets index `y * width + x`.
pub fn gen_lattice(width: usize, height: usize) -> Result<Graph> {
    if width == 0 || height == 0 {
        return Err(Error::Precondition("lattice sides must be positive".into()));
    }
    let id = |x: usize, y: usize| y * width + x;
    let mut edges = Vec::with_capacity(2 * width * height);
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edges.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < height {
                edges.push((id(x, y), id(x, y + 1)));
            }
        }
    }
    let coords = (0..height)
        .flat_map(|y| (0..width).map(move |x| [x as f64, y as f64]))
        .collect();
    Graph::new(width * height, edges)?.with_coordinates(coords)
}

/// Erdős–Rényi `G(N, p)` with `p = avg_degree / (N - 1)`; returns the giant
/// component, so the final node count is usually below `node_count`.
pub fn gen_ern(node_count: usize, avg_degree: f64, seed: u64) -> Result<Graph> {
    if !(avg_degree > 0.0) || node_count == 0 {
        return Err(Error::Precondition(
            "ERN needs node_count > 0 and avg_degree > 0".into(),
        ));
    }
    let p = if node_count > 1 {
        (avg_degree / (node_count - 1) as f64).min(1.0)
    } else {
        0.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..node_count {
        for v in u + 1..node_count {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    giant_or_error(Graph::new(node_count, edges)?, node_count)
}

/// Random geometric graph in the unit square: edge iff the Euclidean
/// distance is at most `radius`. Returns the giant component with
/// coordinates.
pub fn gen_rgn(node_count: usize, radius: f64, seed: u64) -> Result<Graph> {
    if !(radius > 0.0 && radius <= std::f64::consts::SQRT_2) || node_count == 0 {
        return Err(Error::Precondition(format!(
            "RGN radius must lie in (0, sqrt 2], got {radius}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<[f64; 2]> = (0..node_count)
        .map(|_| [rng.gen::<f64>(), rng.gen::<f64>()])
        .collect();
    let r2 = radius * radius;
    let mut edges = Vec::new();
    for u in 0..node_count {
        for v in u + 1..node_count {
            let (dx, dy) = (pts[u][0] - pts[v][0], pts[u][1] - pts[v][1]);
            if dx * dx + dy * dy <= r2 {
                edges.push((u, v));
            }
        }
    }
    let g = Graph::new(node_count, edges)?.with_coordinates(pts)?;
    giant_or_error(g, node_count)
}

/// Radius giving expected mean degree `k` for `n` uniform points in the unit
/// square, ignoring boundary losses.
pub fn rgn_radius_for_degree(n: usize, k: f64) -> f64 {
    (k / (std::f64::consts::PI * (n.max(2) - 1) as f64)).sqrt()
}

fn giant_or_error(g: Graph, requested: usize) -> Result<Graph> {
    let giant = g.giant_component();
    let size = giant.node_count();
    if size < 2 || (size as f64) < MIN_GIANT_FRACTION * requested as f64 {
        return Err(Error::EmptyGiantComponent { size });
    }
    Ok(giant)
}
