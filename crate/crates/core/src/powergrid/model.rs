use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::control::NodeLayout;
use crate::error::{Error, Result};
use crate::network::Graph;

/// Imbalance of total injected power tolerated without slack adjustment.
pub const BALANCE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Generator {
    /// Inertia `M` (s^2).
    pub inertia: f64,
    /// Damping `D` (s).
    pub damping: f64,
    /// Mechanical power (per unit).
    pub power: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bus {
    /// Damping `D` (s); must be positive.
    pub damping: f64,
    /// Injection, negative for loads (per unit).
    pub power: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Susceptance (per unit).
    pub susceptance: f64,
}

/// Structure-preserving swing model. Nodes `0..G` are generators with
/// states `(theta, omega)`; nodes `G..G+B` are buses with state `theta`:
///
/// ```text
/// theta_g' = omega_g
/// M_g omega_g' = P_g - D_g omega_g - sum_j b_gj sin(theta_g - theta_j)
/// D_b theta_b' = P_b - sum_j b_bj sin(theta_b - theta_j)
/// ```
///
/// Generator 0 is the slack node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridModel {
    pub generators: Vec<Generator>,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
}

/// Which state derivatives receive actuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputMap {
    /// Every state variable (identity input matrix).
    All,
    /// Generator phases and frequencies only.
    Generators,
}

impl std::str::FromStr for InputMap {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(InputMap::All),
            "generators" => Ok(InputMap::Generators),
            _ => Err(Error::validation("input map", format!("expected `all` or `generators`, got `{s}`"))),
        }
    }
}

impl std::fmt::Display for InputMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InputMap::All => "all",
            InputMap::Generators => "generators",
        })
    }
}

impl GridModel {
    /// Validates the model and moves any power imbalance above
    /// [`BALANCE_TOLERANCE`] onto the slack generator.
    pub fn new(generators: Vec<Generator>, buses: Vec<Bus>, lines: Vec<Line>) -> Result<Self> {
        let mut g = GridModel {
            generators,
            buses,
            lines,
        };
        g.validate()?;
        let total: f64 = g.powers().iter().sum();
        if total.abs() > BALANCE_TOLERANCE {
            g.generators[0].power -= total;
        }
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if self.generators.is_empty() {
            return Err(Error::validation("grid", "at least one generator (the slack) is required"));
        }
        for (i, gen) in self.generators.iter().enumerate() {
            if !(gen.inertia > 0.0) || !gen.inertia.is_finite() {
                return Err(Error::validation("grid", format!("generator {i}: inertia must be positive")));
            }
            if !gen.damping.is_finite() || !gen.power.is_finite() {
                return Err(Error::validation("grid", format!("generator {i}: non-finite parameter")));
            }
        }
        for (i, bus) in self.buses.iter().enumerate() {
            if !(bus.damping > 0.0) || !bus.damping.is_finite() {
                return Err(Error::validation("grid", format!("bus {i}: damping must be positive")));
            }
            if !bus.power.is_finite() {
                return Err(Error::validation("grid", format!("bus {i}: non-finite power")));
            }
        }
        let n = self.node_count();
        for (k, l) in self.lines.iter().enumerate() {
            if l.from >= n || l.to >= n || l.from == l.to {
                return Err(Error::validation("grid", format!("line {k}: bad endpoints {} {}", l.from, l.to)));
            }
            if !(l.susceptance > 0.0) || !l.susceptance.is_finite() {
                return Err(Error::validation("grid", format!("line {k}: susceptance must be positive")));
            }
        }
        if !self.graph()?.is_connected() {
            return Err(Error::validation("grid", "line graph is not connected"));
        }
        Ok(())
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn node_count(&self) -> usize {
        self.generators.len() + self.buses.len()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.generators.len() + self.buses.len()
    }

    /// Index of node `i`'s phase in the state vector.
    pub fn phase_index(&self, i: usize) -> usize {
        let g = self.generators.len();
        if i < g {
            2 * i
        } else {
            g + i
        }
    }

    pub fn powers(&self) -> Vec<f64> {
        self.generators
            .iter()
            .map(|g| g.power)
            .chain(self.buses.iter().map(|b| b.power))
            .collect()
    }

    pub fn graph(&self) -> Result<Graph> {
        let mut edges: Vec<(usize, usize)> = self.lines.iter().map(|l| (l.from.min(l.to), l.from.max(l.to))).collect();
        edges.sort_unstable();
        edges.dedup();
        Graph::new(self.node_count(), edges)
    }

    /// Neighbours with summed susceptances of parallel lines.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.node_count()];
        for l in &self.lines {
            for (a, b) in [(l.from, l.to), (l.to, l.from)] {
                match adj[a].iter_mut().find(|(j, _)| *j == b) {
                    Some(e) => e.1 += l.susceptance,
                    None => adj[a].push((b, l.susceptance)),
                }
            }
        }
        for row in &mut adj {
            row.sort_by_key(|e| e.0);
        }
        adj
    }

    /// Layout with 2 states per generator and 1 per bus.
    pub fn layout(&self, input_map: InputMap) -> NodeLayout {
        let states: Vec<usize> = (0..self.node_count()).map(|i| if i < self.generators.len() { 2 } else { 1 }).collect();
        let inputs: Vec<usize> = match input_map {
            InputMap::All => states.clone(),
            InputMap::Generators => (0..self.node_count()).map(|i| if i < self.generators.len() { 2 } else { 0 }).collect(),
        };
        NodeLayout::from_sizes(&states, &inputs).expect("equal lengths")
    }

    /// Copy with every generator damping multiplied by `scale`.
    pub fn with_damping_scale(&self, scale: f64) -> GridModel {
        let mut g = self.clone();
        for gen in &mut g.generators {
            gen.damping *= scale;
        }
        g
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# [generators]: inertia_M damping_D power_P\n");
        s.push_str("# [buses]: damping_D power_P\n");
        s.push_str("# [lines]: from to susceptance (0-based node indices, generators first)\n");
        s.push_str("[generators]\n");
        for g in &self.generators {
            writeln!(s, "{} {} {}", g.inertia, g.damping, g.power).unwrap();
        }
        s.push_str("[buses]\n");
        for b in &self.buses {
            writeln!(s, "{} {}", b.damping, b.power).unwrap();
        }
        s.push_str("[lines]\n");
        for l in &self.lines {
            writeln!(s, "{} {} {}", l.from, l.to, l.susceptance).unwrap();
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<GridModel> {
    let path = path.as_ref();
    parse_grid(&fs::read_to_string(path)?, path)
}

/// Parses the sectioned grid format; `path` is used in error messages.
pub fn parse_grid(text: &str, path: &Path) -> Result<GridModel> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Generators,
        Buses,
        Lines,
    }
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut section = Section::None;
    let (mut gens, mut buses, mut lines) = (Vec::new(), Vec::new(), Vec::new());
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[generators]" => section = Section::Generators,
            "[buses]" => section = Section::Buses,
            "[lines]" => section = Section::Lines,
            _ if line.starts_with('[') => return Err(err(lineno, format!("unknown section {line}"))),
            _ => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                let nums = |expected: usize| -> Result<Vec<f64>> {
                    if fields.len() != expected {
                        return Err(err(lineno, format!("expected {expected} columns, found {}", fields.len())));
                    }
                    fields
                        .iter()
                        .map(|f| f.parse::<f64>().map_err(|e| err(lineno, format!("`{f}`: {e}"))))
                        .collect()
                };
                match section {
                    Section::None => return Err(err(lineno, "data before any section header".into())),
                    Section::Generators => {
                        let v = nums(3)?;
                        gens.push(Generator {
                            inertia: v[0],
                            damping: v[1],
                            power: v[2],
                        });
                    }
                    Section::Buses => {
                        let v = nums(2)?;
                        buses.push(Bus {
                            damping: v[0],
                            power: v[1],
                        });
                    }
                    Section::Lines => {
                        if fields.len() != 3 {
                            return Err(err(lineno, format!("expected 3 columns, found {}", fields.len())));
                        }
                        let idx = |f: &str| f.parse::<usize>().map_err(|e| err(lineno, format!("`{f}`: {e}")));
                        lines.push(Line {
                            from: idx(fields[0])?,
                            to: idx(fields[1])?,
                            susceptance: fields[2].parse().map_err(|e| err(lineno, format!("`{}`: {e}", fields[2])))?,
                        });
                    }
                }
            }
        }
    }
    GridModel::new(gens, buses, lines)
}
