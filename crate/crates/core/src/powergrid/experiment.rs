use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{build_localized, control_error, ControlProblem, InputSequence, LocalizedController};
use crate::error::{Error, Result};

use super::dynamics::{discretize, linearize, simulate_nonlinear, solve_equilibrium, DiscreteGrid, DEFAULT_DROP_TOLERANCE};
use super::model::{GridModel, InputMap};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSettings {
    pub f: usize,
    pub q: usize,
    /// Control step (s).
    pub h: f64,
    pub substeps: usize,
    pub input_map: InputMap,
    pub drop_tolerance: f64,
    /// Multiplies every generator damping; values below 1 weaken or
    /// destabilize the synchronous state.
    pub damping_scale: f64,
    pub equilibrium_tolerance: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            f: 5,
            q: 3,
            h: 0.1,
            substeps: 10,
            input_map: InputMap::All,
            drop_tolerance: DEFAULT_DROP_TOLERANCE,
            damping_scale: 1.0,
            equilibrium_tolerance: 1e-10,
        }
    }
}

/// Everything seed-independent: equilibrium, discrete linearization and
/// the localized controller.
#[derive(Clone, Debug)]
pub struct GridSetup {
    pub model: GridModel,
    pub settings: GridSettings,
    pub equilibrium: Vec<f64>,
    pub discrete: DiscreteGrid,
    pub controller: LocalizedController,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRun {
    pub seed: u64,
    /// Control error on the discrete linear model.
    pub eps_linear: f64,
    /// `||x(f) - x*|| / ||x(0) - x*||` for the nonlinear model under control.
    pub eps_nonlinear: f64,
    /// The same ratio without control.
    pub uncontrolled: f64,
}

pub fn prepare_grid_control(model: &GridModel, settings: GridSettings) -> Result<GridSetup> {
    if settings.f == 0 {
        return Err(Error::Precondition("horizon f must be at least 1".into()));
    }
    let model = model.with_damping_scale(settings.damping_scale);
    let eq = solve_equilibrium(&model, settings.equilibrium_tolerance)?;
    let lin = linearize(&model, &eq);
    let discrete = discretize(&model, &lin, settings.h, settings.input_map, settings.drop_tolerance)?;
    let problem = deviation_problem(&discrete, settings.f, vec![0.0; model.state_dim()])?;
    let controller = build_localized(&problem, settings.q)?;
    Ok(GridSetup {
        equilibrium: eq.to_vector(),
        model,
        settings,
        discrete,
        controller,
    })
}

fn deviation_problem(d: &DiscreteGrid, f: usize, x0: Vec<f64>) -> Result<ControlProblem> {
    let dim = x0.len();
    ControlProblem::new(d.a.clone(), d.b.clone(), f, x0, vec![0.0; dim], d.layout.clone())
}

impl GridSetup {
    /// Deviation with every state variable moved by `+-perturb` (random signs).
    pub fn perturbation(&self, perturb: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.model.state_dim())
            .map(|_| if rng.gen::<bool>() { perturb } else { -perturb })
            .collect()
    }

    pub fn run(&self, perturb: f64, seed: u64) -> Result<GridRun> {
        if perturb == 0.0 {
            return Ok(GridRun {
                seed,
                eps_linear: 0.0,
                eps_nonlinear: 0.0,
                uncontrolled: 0.0,
            });
        }
        let mut run = self.run_deviation(&self.perturbation(perturb, seed))?;
        run.seed = seed;
        Ok(run)
    }

    /// Controls the nonlinear grid from `equilibrium + deviation` back to the equilibrium.
    pub fn run_deviation(&self, deviation: &[f64]) -> Result<GridRun> {
        let f = self.settings.f;
        let zero = vec![0.0; deviation.len()];
        let u = self.controller.apply(deviation, &zero)?;
        let problem = deviation_problem(&self.discrete, f, deviation.to_vec())?;
        let eps_linear = control_error(&problem, &u)?;
        let eps_nonlinear = self.nonlinear_ratio(deviation, &u)?;
        let idle = InputSequence::zeros(u.values.len(), u.order);
        let uncontrolled = self.nonlinear_ratio(deviation, &idle)?;
        Ok(GridRun {
            seed: 0,
            eps_linear,
            eps_nonlinear,
            uncontrolled,
        })
    }

    /// Nonlinear trajectory from `equilibrium + deviation` under `u`.
    pub fn trajectory(&self, deviation: &[f64], u: &InputSequence) -> Result<Vec<Vec<f64>>> {
        let x0: Vec<f64> = self.equilibrium.iter().zip(deviation).map(|(a, b)| a + b).collect();
        let forcing = self.discrete.forcing(u, self.settings.f)?;
        simulate_nonlinear(&self.model, &x0, &forcing, self.settings.h, self.settings.substeps)
    }

    fn nonlinear_ratio(&self, deviation: &[f64], u: &InputSequence) -> Result<f64> {
        let traj = self.trajectory(deviation, u)?;
        let last = traj.last().expect("initial state");
        let num = crate::control::distance(last, &self.equilibrium);
        let den = deviation.iter().map(|v| v * v).sum::<f64>().sqrt();
        if den == 0.0 {
            return Err(Error::UndefinedError);
        }
        Ok(num / den)
    }
}

/// One perturbation-recovery run with its neighbourhood sizes `|N1(i)|`.
pub fn grid_control_experiment(
    model: &GridModel,
    settings: GridSettings,
    perturb: f64,
    seed: u64,
) -> Result<(GridRun, Vec<usize>)> {
    let setup = prepare_grid_control(model, settings)?;
    let run = setup.run(perturb, seed)?;
    Ok((run, setup.controller.sin_sizes_desired()))
}
