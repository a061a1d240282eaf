use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::control::{InputSequence, NodeLayout, SequenceOrder};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

use super::model::{GridModel, InputMap};

/// Largest state dimension for the dense matrix exponential.
pub const DENSE_EXP_LIMIT: usize = 4096;

/// Default relative drop tolerance applied to the discrete matrices.
pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub generator_phase: Vec<f64>,
    pub generator_frequency: Vec<f64>,
    pub bus_phase: Vec<f64>,
}

impl GridState {
    pub fn zeros(model: &GridModel) -> Self {
        GridState {
            generator_phase: vec![0.0; model.generator_count()],
            generator_frequency: vec![0.0; model.generator_count()],
            bus_phase: vec![0.0; model.bus_count()],
        }
    }

    /// Node-major vector: `(theta, omega)` per generator, then `theta` per bus.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.generator_phase.len() + self.bus_phase.len());
        for (t, w) in self.generator_phase.iter().zip(&self.generator_frequency) {
            v.push(*t);
            v.push(*w);
        }
        v.extend_from_slice(&self.bus_phase);
        v
    }

    pub fn from_vector(model: &GridModel, x: &[f64]) -> Result<Self> {
        if x.len() != model.state_dim() {
            return Err(Error::dims("GridState", model.state_dim(), x.len()));
        }
        let g = model.generator_count();
        Ok(GridState {
            generator_phase: (0..g).map(|i| x[2 * i]).collect(),
            generator_frequency: (0..g).map(|i| x[2 * i + 1]).collect(),
            bus_phase: x[2 * g..].to_vec(),
        })
    }

    /// Phase of every node, generators first.
    pub fn phases(&self) -> Vec<f64> {
        self.generator_phase.iter().chain(&self.bus_phase).copied().collect()
    }
}

/// `P_i - sum_j b_ij sin(theta_i - theta_j)` at every node.
pub fn power_mismatch(model: &GridModel, phases: &[f64]) -> Vec<f64> {
    let adj = model.adjacency();
    model
        .powers()
        .iter()
        .enumerate()
        .map(|(i, p)| p - adj[i].iter().map(|&(j, b)| b * (phases[i] - phases[j]).sin()).sum::<f64>())
        .collect()
}

/// Laplacian with weights `b_ij cos(theta_i - theta_j)`.
pub fn weighted_laplacian(model: &GridModel, phases: &[f64]) -> DMatrix<f64> {
    let n = model.node_count();
    let mut l = DMatrix::zeros(n, n);
    for (i, row) in model.adjacency().iter().enumerate() {
        for &(j, b) in row {
            let w = b * (phases[i] - phases[j]).cos();
            l[(i, j)] -= w;
            l[(i, i)] += w;
        }
    }
    l
}

/// Synchronous fixed point by Newton's method with the slack phase at 0.
pub fn solve_equilibrium(model: &GridModel, tol: f64) -> Result<GridState> {
    const MAX_ITERS: usize = 50;
    let n = model.node_count();
    let mut theta = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..=MAX_ITERS {
        let mismatch = power_mismatch(model, &theta);
        residual = mismatch.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !residual.is_finite() {
            return Err(Error::Divergence { iterations: it, residual });
        }
        if residual <= tol {
            let mut state = GridState::zeros(model);
            let g = model.generator_count();
            state.generator_phase.copy_from_slice(&theta[..g]);
            state.bus_phase.copy_from_slice(&theta[g..]);
            return Ok(state);
        }
        if it == MAX_ITERS || n == 1 {
            break;
        }
        let l = weighted_laplacian(model, &theta);
        let reduced = l.view((1, 1), (n - 1, n - 1)).into_owned();
        let rhs = DVector::from_iterator(n - 1, mismatch[1..].iter().copied());
        let Some(step) = reduced.lu().solve(&rhs) else {
            return Err(Error::Divergence { iterations: it, residual });
        };
        for i in 1..n {
            theta[i] += step[i - 1];
        }
    }
    Err(Error::Divergence {
        iterations: MAX_ITERS,
        residual,
    })
}

/// Continuous-time linearization around an equilibrium.
#[derive(Clone, Debug)]
pub struct LinearizedGrid {
    pub equilibrium: GridState,
    /// Jacobian of the swing dynamics, node-major state order.
    pub a_continuous: SparseMatrix,
}

pub fn linearize(model: &GridModel, eq: &GridState) -> LinearizedGrid {
    let phases = eq.phases();
    let g = model.generator_count();
    let mut triplets = Vec::new();
    for (i, row) in model.adjacency().iter().enumerate() {
        let (target, scale) = if i < g {
            let gen = &model.generators[i];
            triplets.push((2 * i, 2 * i + 1, 1.0));
            triplets.push((2 * i + 1, 2 * i + 1, -gen.damping / gen.inertia));
            (2 * i + 1, 1.0 / gen.inertia)
        } else {
            (model.phase_index(i), 1.0 / model.buses[i - g].damping)
        };
        for &(j, b) in row {
            let w = b * (phases[i] - phases[j]).cos() * scale;
            triplets.push((target, model.phase_index(i), -w));
            triplets.push((target, model.phase_index(j), w));
        }
    }
    let dim = model.state_dim();
    LinearizedGrid {
        equilibrium: eq.clone(),
        a_continuous: SparseMatrix::from_triplets(dim, dim, triplets).expect("indices in range"),
    }
}

/// Continuous input matrix: identity columns for the actuated states.
pub fn input_matrix(model: &GridModel, input_map: InputMap) -> SparseMatrix {
    let dim = model.state_dim();
    let actuated: Vec<usize> = match input_map {
        InputMap::All => (0..dim).collect(),
        InputMap::Generators => (0..2 * model.generator_count()).collect(),
    };
    SparseMatrix::from_triplets(dim, actuated.len(), actuated.iter().enumerate().map(|(c, &r)| (r, c, 1.0)))
        .expect("indices in range")
}

/// Discrete-time system under zero-order hold.
#[derive(Clone, Debug)]
pub struct DiscreteGrid {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub b_continuous: SparseMatrix,
    pub h: f64,
    pub layout: NodeLayout,
}

/// Zero-order-hold discretization: `exp([[A, B], [0, 0]] h) = [[A_d, B_d], [0, I]]`.
/// Entries below `drop_tolerance` times the largest magnitude are removed.
pub fn discretize(
    model: &GridModel,
    lin: &LinearizedGrid,
    h: f64,
    input_map: InputMap,
    drop_tolerance: f64,
) -> Result<DiscreteGrid> {
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("step h must be positive, got {h}")));
    }
    let b_c = input_matrix(model, input_map);
    let (a_d, b_d) = zoh(&lin.a_continuous.to_dense(), &b_c.to_dense(), h)?;
    let sparsify = |m: &DMatrix<f64>| {
        let tol = drop_tolerance * m.amax();
        SparseMatrix::from_dense(&m.map(|v| if v.abs() > tol { v } else { 0.0 }))
    };
    Ok(DiscreteGrid {
        a: sparsify(&a_d),
        b: sparsify(&b_d),
        b_continuous: b_c,
        h,
        layout: model.layout(input_map),
    })
}

/// Dense zero-order hold of `(a, b)` with step `h`.
pub fn zoh(a: &DMatrix<f64>, b: &DMatrix<f64>, h: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, m) = (a.nrows(), b.ncols());
    if n + m > DENSE_EXP_LIMIT {
        return Err(Error::TooLarge {
            dim: n + m,
            limit: DENSE_EXP_LIMIT,
        });
    }
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * h));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * h));
    let e = aug.exp();
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned()))
}

impl DiscreteGrid {
    /// Per-step continuous forcing `B_c u(k)` for a sequence over `f` steps.
    pub fn forcing(&self, u: &InputSequence, f: usize) -> Result<Vec<Vec<f64>>> {
        let width = self.layout.input_dim();
        if u.values.len() != width * f {
            return Err(Error::dims("forcing", width * f, u.values.len()));
        }
        let u = u.to_order(SequenceOrder::TimeMajor, &crate::control::PermutationMap::for_layout(&self.layout, f))?;
        (0..f).map(|k| self.b_continuous.matvec(u.step(k, width))).collect()
    }
}

/// Right-hand side of the swing equations plus `forcing`.
pub fn swing_rhs(model: &GridModel, adj: &[Vec<(usize, f64)>], x: &[f64], forcing: &[f64], out: &mut [f64]) {
    let g = model.generator_count();
    let phase = |i: usize| x[model.phase_index(i)];
    for (i, row) in adj.iter().enumerate() {
        let flow: f64 = row.iter().map(|&(j, b)| b * (phase(i) - phase(j)).sin()).sum();
        if i < g {
            let gen = &model.generators[i];
            out[2 * i] = x[2 * i + 1] + forcing[2 * i];
            out[2 * i + 1] = (gen.power - gen.damping * x[2 * i + 1] - flow) / gen.inertia + forcing[2 * i + 1];
        } else {
            let k = model.phase_index(i);
            let bus = &model.buses[i - g];
            out[k] = (bus.power - flow) / bus.damping + forcing[k];
        }
    }
}

/// Classical RK4 with `substeps` stages per control step of length `h`;
/// returns the states at every control step boundary (`forcing.len() + 1` states).
pub fn simulate_nonlinear(
    model: &GridModel,
    x0: &[f64],
    forcing: &[Vec<f64>],
    h: f64,
    substeps: usize,
) -> Result<Vec<Vec<f64>>> {
    let dim = model.state_dim();
    if substeps == 0 {
        return Err(Error::Precondition("substeps must be at least 1".into()));
    }
    if x0.len() != dim {
        return Err(Error::dims("simulate_nonlinear", dim, x0.len()));
    }
    if let Some(bad) = forcing.iter().find(|v| v.len() != dim) {
        return Err(Error::dims("simulate_nonlinear forcing", dim, bad.len()));
    }
    let adj = model.adjacency();
    let dt = h / substeps as f64;
    let mut traj = Vec::with_capacity(forcing.len() + 1);
    let mut x = x0.to_vec();
    traj.push(x.clone());
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    for (step, u) in forcing.iter().enumerate() {
        for _ in 0..substeps {
            swing_rhs(model, &adj, &x, u, &mut k1);
            axpy(&x, 0.5 * dt, &k1, &mut tmp);
            swing_rhs(model, &adj, &tmp, u, &mut k2);
            axpy(&x, 0.5 * dt, &k2, &mut tmp);
            swing_rhs(model, &adj, &tmp, u, &mut k3);
            axpy(&x, dt, &k3, &mut tmp);
            swing_rhs(model, &adj, &tmp, u, &mut k4);
            for i in 0..dim {
                x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: step + 1 });
        }
        traj.push(x.clone());
    }
    Ok(traj)
}

fn axpy(x: &[f64], a: f64, y: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = x[i] + a * y[i];
    }
}

/// `time,x0,x1,...` rows, one per control step.
pub fn write_trajectory_csv(path: impl AsRef<Path>, trajectory: &[Vec<f64>], h: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let dim = trajectory.first().map_or(0, Vec::len);
    let mut header = vec!["time".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (k, x) in trajectory.iter().enumerate() {
        let mut row = vec![(k as f64 * h).to_string()];
        row.extend(x.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
