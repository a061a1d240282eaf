//! Strict `key = value` experiment configuration with `[section]` headers.
//!
//! ```text
//! [experiment]
//! kind = sweep-q
//! seeds = 20
//!
//! [network]
//! kind = ern
//! nodes = 120
//! mean_degree = 3
//!
//! [control]
//! f = 3
//! q = 0..5
//! presets = B1, B2
//! ```
//!
//! Lists are comma separated; integer lists also accept inclusive ranges
//! `a..b`. Unknown sections or keys and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::network::InputPreset;
use crate::powergrid::InputMap;
use crate::sparse::ConditionMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Localization,
    SweepQ,
    SweepN,
    SweepR,
    Decay,
    PowerGrid,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Localization,
        ExperimentKind::SweepQ,
        ExperimentKind::SweepN,
        ExperimentKind::SweepR,
        ExperimentKind::Decay,
        ExperimentKind::PowerGrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Localization => "localization",
            ExperimentKind::SweepQ => "sweep-q",
            ExperimentKind::SweepN => "sweep-N",
            ExperimentKind::SweepR => "sweep-r",
            ExperimentKind::Decay => "decay",
            ExperimentKind::PowerGrid => "powergrid",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkKind {
    Ern,
    Rgn,
    Lattice,
}

impl NetworkKind {
    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Ern => "ern",
            NetworkKind::Rgn => "rgn",
            NetworkKind::Lattice => "lattice",
        }
    }

    /// Mean degree used when a config does not set one.
    pub fn default_mean_degree(self) -> f64 {
        match self {
            NetworkKind::Ern => 4.0,
            NetworkKind::Rgn => 8.0,
            NetworkKind::Lattice => 4.0,
        }
    }
}

impl FromStr for NetworkKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ern" => Ok(NetworkKind::Ern),
            "rgn" => Ok(NetworkKind::Rgn),
            "lattice" => Ok(NetworkKind::Lattice),
            _ => Err(format!("unknown network kind `{s}`")),
        }
    }
}

fn condition_name(m: ConditionMode) -> &'static str {
    match m {
        ConditionMode::Exact => "exact",
        ConditionMode::Iterative => "iterative",
        ConditionMode::Auto => "auto",
    }
}

fn parse_condition(s: &str) -> std::result::Result<ConditionMode, String> {
    match s {
        "exact" => Ok(ConditionMode::Exact),
        "iterative" => Ok(ConditionMode::Iterative),
        "auto" => Ok(ConditionMode::Auto),
        _ => Err(format!("unknown condition mode `{s}`")),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub output: PathBuf,
    pub seeds: usize,
    pub master_seed: u64,

    pub network: NetworkKind,
    /// Requested node counts (ERN/RGN); one entry except for `sweep-N`.
    pub nodes: Vec<usize>,
    pub mean_degree: f64,
    pub width: usize,
    pub height: usize,
    pub spectral_radius: f64,

    pub n: usize,
    pub m: usize,
    pub f: Vec<usize>,
    pub q: Vec<usize>,
    pub presets: Vec<InputPreset>,
    pub deltas: Vec<f64>,
    /// Fractions of controlled nodes.
    pub fractions: Vec<f64>,
    pub condition: ConditionMode,
    pub cg_tolerance: f64,

    /// Grid description; the bundled synthetic grid when absent.
    pub grid_file: Option<PathBuf>,
    pub h: f64,
    pub substeps: usize,
    pub perturb: f64,
    pub input_map: InputMap,
    pub drop_tolerance: f64,
    pub damping_scale: f64,
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            output: PathBuf::from(format!("out/{}", kind.name())),
            seeds: 20,
            master_seed: 1,
            network: NetworkKind::Ern,
            nodes: vec![150],
            mean_degree: NetworkKind::Ern.default_mean_degree(),
            width: 35,
            height: 35,
            spectral_radius: crate::network::DEFAULT_SPECTRAL_RADIUS,
            n: 3,
            m: 3,
            f: vec![3],
            q: vec![0, 1, 2, 3],
            presets: vec![InputPreset::B1],
            deltas: if kind == ExperimentKind::Localization {
                crate::control::DEFAULT_DELTAS.to_vec()
            } else {
                vec![0.0]
            },
            fractions: vec![1.0],
            condition: ConditionMode::Auto,
            cg_tolerance: crate::control::DEFAULT_CG_TOLERANCE,
            grid_file: None,
            h: 0.1,
            substeps: 10,
            perturb: 0.01,
            input_map: InputMap::All,
            drop_tolerance: crate::powergrid::DEFAULT_DROP_TOLERANCE,
            damping_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::validation(format!("config key `{key}`"), msg));
        if self.seeds == 0 {
            return bad("seeds", "must be at least 1");
        }
        for (key, empty) in [
            ("nodes", self.nodes.is_empty()),
            ("f", self.f.is_empty()),
            ("q", self.q.is_empty()),
            ("presets", self.presets.is_empty()),
            ("deltas", self.deltas.is_empty()),
            ("fractions", self.fractions.is_empty()),
        ] {
            if empty {
                return bad(key, "range is empty");
            }
        }
        if self.n == 0 || self.m == 0 {
            return bad("n", "n and m must be positive");
        }
        if self.f.contains(&0) {
            return bad("f", "horizon must be at least 1");
        }
        if self.nodes.iter().any(|&v| v < 2) {
            return bad("nodes", "networks need at least 2 nodes");
        }
        if !(self.mean_degree > 0.0) {
            return bad("mean_degree", "must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("width", "lattice sides must be positive");
        }
        if !(self.spectral_radius > 0.0) {
            return bad("spectral_radius", "must be positive");
        }
        if self.deltas.iter().any(|d| !(*d >= 0.0)) {
            return bad("deltas", "thresholds must be >= 0");
        }
        if self.fractions.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad("fractions", "fractions must lie in (0, 1]");
        }
        if !(self.cg_tolerance > 0.0) {
            return bad("cg_tolerance", "must be positive");
        }
        if !(self.h > 0.0) {
            return bad("h", "must be positive");
        }
        if self.substeps == 0 {
            return bad("substeps", "must be at least 1");
        }
        if !(self.perturb >= 0.0) {
            return bad("perturb", "must be >= 0");
        }
        if !(self.drop_tolerance >= 0.0) {
            return bad("drop_tolerance", "must be >= 0");
        }
        Ok(())
    }

    /// Text form; parsing it yields an identical config.
    pub fn to_text(&self) -> String {
        let join = |v: &[String]| v.join(", ");
        let nums = |v: &[usize]| join(&v.iter().map(usize::to_string).collect::<Vec<_>>());
        let floats = |v: &[f64]| join(&v.iter().map(f64::to_string).collect::<Vec<_>>());
        let mut s = String::new();
        writeln!(s, "[experiment]").unwrap();
        writeln!(s, "kind = {}", self.kind.name()).unwrap();
        writeln!(s, "output = {}", self.output.display()).unwrap();
        writeln!(s, "seeds = {}", self.seeds).unwrap();
        writeln!(s, "master_seed = {}", self.master_seed).unwrap();
        writeln!(s, "\n[network]").unwrap();
        writeln!(s, "kind = {}", self.network.name()).unwrap();
        writeln!(s, "nodes = {}", nums(&self.nodes)).unwrap();
        writeln!(s, "mean_degree = {}", self.mean_degree).unwrap();
        writeln!(s, "width = {}", self.width).unwrap();
        writeln!(s, "height = {}", self.height).unwrap();
        writeln!(s, "spectral_radius = {}", self.spectral_radius).unwrap();
        writeln!(s, "\n[control]").unwrap();
        writeln!(s, "n = {}", self.n).unwrap();
        writeln!(s, "m = {}", self.m).unwrap();
        writeln!(s, "f = {}", nums(&self.f)).unwrap();
        writeln!(s, "q = {}", nums(&self.q)).unwrap();
        writeln!(s, "presets = {}", join(&self.presets.iter().map(|p| p.to_string()).collect::<Vec<_>>())).unwrap();
        writeln!(s, "deltas = {}", floats(&self.deltas)).unwrap();
        writeln!(s, "fractions = {}", floats(&self.fractions)).unwrap();
        writeln!(s, "condition = {}", condition_name(self.condition)).unwrap();
        writeln!(s, "cg_tolerance = {}", self.cg_tolerance).unwrap();
        writeln!(s, "\n[grid]").unwrap();
        if let Some(p) = &self.grid_file {
            writeln!(s, "file = {}", p.display()).unwrap();
        }
        writeln!(s, "h = {}", self.h).unwrap();
        writeln!(s, "substeps = {}", self.substeps).unwrap();
        writeln!(s, "perturb = {}", self.perturb).unwrap();
        writeln!(s, "input_map = {}", self.input_map).unwrap();
        writeln!(s, "drop_tolerance = {}", self.drop_tolerance).unwrap();
        writeln!(s, "damping_scale = {}", self.damping_scale).unwrap();
        s
    }
}

/// Reads, parses and validates a configuration file.
pub fn validate_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_config(&text, path)
}

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    // (section, key) -> (value, line)
    let mut entries: BTreeMap<(String, String), (String, usize)> = BTreeMap::new();
    let mut section = String::new();
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(err(lineno, format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(lineno, format!("expected `key = value`, found `{line}`")));
        };
        let key = key.trim();
        if section.is_empty() {
            return Err(err(lineno, format!("key `{key}` outside any section")));
        }
        let allowed = SECTIONS.iter().find(|(s, _)| *s == section).unwrap().1;
        if !allowed.contains(&key) {
            return Err(err(lineno, format!("unknown key `{key}` in [{section}]")));
        }
        if entries
            .insert((section.clone(), key.to_string()), (value.trim().to_string(), lineno))
            .is_some()
        {
            return Err(err(lineno, format!("repeated key `{key}` in [{section}]")));
        }
    }

    let get = |s: &str, k: &str| entries.get(&(s.to_string(), k.to_string()));
    let kind = match get("experiment", "kind") {
        Some((v, line)) => v.parse::<ExperimentKind>().map_err(|e| err(*line, e))?,
        None => return Err(Error::validation("config key `kind`", "[experiment] kind is required")),
    };
    let mut c = ExperimentConfig::new(kind);
    for ((sec, key), (value, line)) in &entries {
        let line = *line;
        let fail = |e: String| err(line, format!("{key}: {e}"));
        let scalar = |v: &str| -> std::result::Result<f64, String> { v.parse::<f64>().map_err(|e| e.to_string()) };
        let int = |v: &str| -> std::result::Result<usize, String> { v.parse::<usize>().map_err(|e| e.to_string()) };
        match (sec.as_str(), key.as_str()) {
            ("experiment", "kind") => {}
            ("experiment", "output") => c.output = PathBuf::from(value),
            ("experiment", "seeds") => c.seeds = int(value).map_err(fail)?,
            ("experiment", "master_seed") => c.master_seed = value.parse().map_err(|e: std::num::ParseIntError| fail(e.to_string()))?,
            // Sorted iteration visits `kind` before `mean_degree`, so an
            // explicit degree still overrides the network default.
            ("network", "kind") => {
                c.network = value.parse().map_err(fail)?;
                c.mean_degree = c.network.default_mean_degree();
            }
            ("network", "nodes") => c.nodes = int_list(value).map_err(fail)?,
            ("network", "mean_degree") => c.mean_degree = scalar(value).map_err(fail)?,
            ("network", "width") => c.width = int(value).map_err(fail)?,
            ("network", "height") => c.height = int(value).map_err(fail)?,
            ("network", "spectral_radius") => c.spectral_radius = scalar(value).map_err(fail)?,
            ("control", "n") => c.n = int(value).map_err(fail)?,
            ("control", "m") => c.m = int(value).map_err(fail)?,
            ("control", "f") => c.f = int_list(value).map_err(fail)?,
            ("control", "q") => c.q = int_list(value).map_err(fail)?,
            ("control", "presets") => {
                c.presets = list(value)
                    .iter()
                    .map(|p| p.parse::<InputPreset>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(fail)?
            }
            ("control", "deltas") => c.deltas = float_list(value).map_err(fail)?,
            ("control", "fractions") => c.fractions = float_list(value).map_err(fail)?,
            ("control", "condition") => c.condition = parse_condition(value).map_err(fail)?,
            ("control", "cg_tolerance") => c.cg_tolerance = scalar(value).map_err(fail)?,
            ("grid", "file") => c.grid_file = Some(PathBuf::from(value)),
            ("grid", "h") => c.h = scalar(value).map_err(fail)?,
            ("grid", "substeps") => c.substeps = int(value).map_err(fail)?,
            ("grid", "perturb") => c.perturb = scalar(value).map_err(fail)?,
            ("grid", "input_map") => c.input_map = value.parse::<InputMap>().map_err(|e| fail(e.to_string()))?,
            ("grid", "drop_tolerance") => c.drop_tolerance = scalar(value).map_err(fail)?,
            ("grid", "damping_scale") => c.damping_scale = scalar(value).map_err(fail)?,
            _ => unreachable!("keys checked against SECTIONS"),
        }
    }
    c.validate()?;
    Ok(c)
}

const SECTIONS: [(&str, &[&str]); 4] = [
    ("experiment", &["kind", "output", "seeds", "master_seed"]),
    (
        "network",
        &["kind", "nodes", "mean_degree", "width", "height", "spectral_radius"],
    ),
    (
        "control",
        &["n", "m", "f", "q", "presets", "deltas", "fractions", "condition", "cg_tolerance"],
    ),
    (
        "grid",
        &["file", "h", "substeps", "perturb", "input_map", "drop_tolerance", "damping_scale"],
    ),
];

fn list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn int_list(value: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in list(value) {
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a.trim().parse().map_err(|e| format!("`{item}`: {e}"))?;
            let b: usize = b.trim().parse().map_err(|e| format!("`{item}`: {e}"))?;
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|e| format!("`{item}`: {e}"))?);
        }
    }
    Ok(out)
}

fn float_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    list(value)
        .iter()
        .map(|v| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect()
}
