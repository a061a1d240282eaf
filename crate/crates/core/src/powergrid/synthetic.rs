use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::dynamics::weighted_laplacian;
use super::model::{Bus, Generator, GridModel, Line};

/// Seed of the bundled 35-generator, 189-bus grid.
pub const SYNTHETIC_SEED: u64 = 35189;

/// Largest DC-flow phase difference across a line after load scaling (rad).
pub const MAX_LINE_ANGLE: f64 = 0.3;

/// Randomized grid with the given counts: nodes placed uniformly in the unit
/// square, a Euclidean minimum spanning tree plus short extra lines,
/// `M ~ U[2, 6]`, generator `D ~ U[1, 2]`, bus `D ~ U[1, 2]`,
/// susceptances `~ U[1, 3]`, generation `~ U[0.5, 1.5]`, loads `~ U[0, 1]`
/// balanced against generation and scaled so the DC power flow keeps
/// every line angle below [`MAX_LINE_ANGLE`]. Parameters are rounded to
/// four decimals.
pub fn synthetic_grid(generators: usize, buses: usize, seed: u64) -> Result<GridModel> {
    let n = generators + buses;
    if generators == 0 || n < 2 {
        return Err(Error::Precondition("need a generator and at least two nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen(), rng.gen()]).collect();
    let dist = |i: usize, j: usize| ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();

    // Prim's algorithm on the complete Euclidean graph.
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n + n / 3);
    in_tree[0] = true;
    for j in 1..n {
        best[j] = (dist(0, j), 0);
    }
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0))
            .unwrap();
        in_tree[next] = true;
        pairs.push((best[next].1.min(next), best[next].1.max(next)));
        for j in 0..n {
            if !in_tree[j] && dist(next, j) < best[j].0 {
                best[j] = (dist(next, j), next);
            }
        }
    }
    // Extra lines to the nearest node not already connected.
    for i in 0..n {
        if rng.gen::<f64>() < 0.3 {
            let cand = (0..n)
                .filter(|&j| j != i && !pairs.contains(&(i.min(j), i.max(j))))
                .min_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)));
            if let Some(j) = cand {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();

    let round = |v: f64| (v * 1e4).round() / 1e4;
    let mut gens: Vec<Generator> = (0..generators)
        .map(|_| Generator {
            inertia: round(rng.gen_range(2.0..6.0)),
            damping: round(rng.gen_range(1.0..2.0)),
            power: rng.gen_range(0.5..1.5),
        })
        .collect();
    let mut bus: Vec<Bus> = (0..buses)
        .map(|_| Bus {
            damping: round(rng.gen_range(1.0..2.0)),
            power: -rng.gen_range(0.0..1.0),
        })
        .collect();
    let lines: Vec<Line> = pairs
        .iter()
        .map(|&(from, to)| Line {
            from,
            to,
            susceptance: round(rng.gen_range(1.0..3.0)),
        })
        .collect();

    let generation: f64 = gens.iter().map(|g| g.power).sum();
    let load: f64 = -bus.iter().map(|b| b.power).sum::<f64>();
    if load > 0.0 {
        for b in &mut bus {
            b.power *= generation / load;
        }
    } else {
        gens[0].power -= generation;
    }

    // DC power flow: L theta = P with the slack phase pinned.
    let draft = GridModel::new(gens.clone(), bus.clone(), lines.clone())?;
    let l: DMatrix<f64> = weighted_laplacian(&draft, &vec![0.0; n]);
    let p = draft.powers();
    let reduced = l.view((1, 1), (n - 1, n - 1)).into_owned();
    let theta_r = reduced
        .lu()
        .solve(&DVector::from_iterator(n - 1, p[1..].iter().copied()))
        .ok_or_else(|| Error::Precondition("singular DC power flow".into()))?;
    let theta = |i: usize| if i == 0 { 0.0 } else { theta_r[i - 1] };
    let max_angle = lines.iter().map(|l| (theta(l.from) - theta(l.to)).abs()).fold(0.0, f64::max);
    let scale = if max_angle > MAX_LINE_ANGLE { MAX_LINE_ANGLE / max_angle } else { 1.0 };
    for g in &mut gens {
        g.power = round(g.power * scale);
    }
    for b in &mut bus {
        b.power = round(b.power * scale);
    }
    let rest: f64 = gens[1..].iter().map(|g| g.power).chain(bus.iter().map(|b| b.power)).sum();
    gens[0].power = round(-rest);
    GridModel::new(gens, bus, lines)
}
