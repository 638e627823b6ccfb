//! Run configuration: one TOML document with `problem`, `solver`,
//! `experiment` and `output` sections, plus `section.key=value` overrides.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ControlProblem, SeparablePolynomial};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    /// Builtin name, or `custom` to build from `nu`/`q` coefficients.
    pub name: String,
    /// Per-axis polynomial coefficients (constant term first) of ν.
    pub nu: Option<Vec<Vec<f64>>>,
    /// Per-axis polynomial coefficients of q.
    pub q: Option<Vec<Vec<f64>>>,
    pub sigma: Option<f64>,
    pub r: Option<f64>,
    pub horizon: Option<f64>,
    /// State-cost weight for `lqg_1d`.
    pub beta: Option<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            name: "cubic_1d".into(),
            nu: None,
            q: None,
            sigma: None,
            r: None,
            horizon: None,
            beta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Box per axis. Empty means the default box for the mode.
    pub domain: Vec<[f64; 2]>,
    /// Spectral grid points.
    pub points: usize,
    /// Eigenpairs to compute.
    pub modes: usize,
    /// Widen the spectral box until the ground state is contained.
    pub auto_domain: bool,
    pub strict: bool,
    /// Report confinement failures without refusing to solve.
    pub allow_unstable: bool,
    /// Gauss-Hermite points per axis.
    pub quad_points: usize,
    pub dt: f64,
    pub max_cells: usize,
    /// Build a fresh grid around every query instead of one global grid.
    pub local: bool,
    /// Times at which value surfaces are exported.
    pub surface_times: Vec<f64>,
    /// Evaluation points per axis for value surfaces.
    pub surface_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            domain: Vec::new(),
            points: crate::spectral::DEFAULT_POINTS,
            modes: 8,
            auto_domain: true,
            strict: false,
            allow_unstable: false,
            quad_points: 20,
            dt: 0.1,
            max_cells: crate::quadrature::DEFAULT_MAX_CELLS,
            local: false,
            surface_times: Vec::new(),
            surface_points: 41,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerChoice {
    None,
    Stationary,
    Quadrature,
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    Uniform,
    Stationary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsChoice {
    Langevin,
    Integrator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub controller: ControllerChoice,
    /// Directory holding controller artifacts; defaults to the output directory.
    pub controller_dir: Option<PathBuf>,
    pub dynamics: DynamicsChoice,
    pub agents: usize,
    pub realizations: usize,
    pub seed: u64,
    /// Simulation horizon; for stationary runs defaults to 5/(λ₁−λ₀).
    pub horizon: Option<f64>,
    pub dt: f64,
    /// Snapshot times; for stationary runs defaults to 0, T/5, T/2, T.
    pub snapshots: Vec<f64>,
    pub init: InitChoice,
    pub init_box: Vec<[f64; 2]>,
    pub bins: Vec<usize>,
    /// Histogram box; defaults to the control domain.
    pub bin_domain: Vec<[f64; 2]>,
    pub goals: Vec<Vec<f64>>,
    pub radius: f64,
    pub l1_threshold: f64,
    /// Required lead of the controlled goal fraction over the uncontrolled one.
    pub goal_margin: f64,
    pub max_escape: f64,
    /// Write per-snapshot agent states.
    pub trajectories: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            controller: ControllerChoice::Stationary,
            controller_dir: None,
            dynamics: DynamicsChoice::Langevin,
            agents: 500,
            realizations: 100,
            seed: 1,
            horizon: None,
            dt: 0.01,
            snapshots: Vec::new(),
            init: InitChoice::Uniform,
            init_box: vec![[-2.0, 2.0]],
            bins: Vec::new(),
            bin_domain: Vec::new(),
            goals: Vec::new(),
            radius: 0.5,
            l1_threshold: 0.1,
            goal_margin: 0.2,
            max_escape: 0.01,
            trajectories: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Parse TOML text, apply `section.key=value` overrides, then validate.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let de_err = |e: toml::de::Error| Error::Config(e.to_string());
        // Parsing the file alone first keeps line and column information
        // in its diagnostics; overrides are then merged at the value level.
        let mut cfg: RunConfig = toml::from_str(text).map_err(de_err)?;
        if !overrides.is_empty() {
            let mut doc: toml::Table = text.parse().map_err(de_err)?;
            for o in overrides {
                apply_override(&mut doc, o)?;
            }
            cfg = toml::Value::Table(doc).try_into().map_err(de_err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let s = &self.solver;
        if s.points < 100 {
            return bad(format!("solver.points must be at least 100, got {}", s.points));
        }
        if s.modes < 2 || s.modes >= s.points {
            return bad(format!("solver.modes must lie in [2, points), got {}", s.modes));
        }
        if s.quad_points < 2 {
            return bad("solver.quad_points must be at least 2".into());
        }
        if !(s.dt > 0.0) {
            return bad("solver.dt must be positive".into());
        }
        if s.domain.iter().any(|[lo, hi]| !(hi > lo)) {
            return bad("solver.domain intervals must satisfy lo < hi".into());
        }
        let e = &self.experiment;
        if e.agents == 0 || e.realizations == 0 {
            return bad("experiment.agents and experiment.realizations must be positive".into());
        }
        if !(e.dt > 0.0) {
            return bad("experiment.dt must be positive".into());
        }
        if !(e.radius > 0.0) || !(e.l1_threshold > 0.0) || !(0.0..=1.0).contains(&e.max_escape) {
            return bad("experiment.radius, l1_threshold and max_escape are out of range".into());
        }
        if e.init_box.iter().chain(&e.bin_domain).any(|[lo, hi]| !(hi > lo)) {
            return bad("experiment boxes must satisfy lo < hi".into());
        }
        Ok(())
    }

    /// The control problem described by the `problem` section.
    pub fn problem(&self) -> Result<ControlProblem> {
        let c = &self.problem;
        let base = match c.name.as_str() {
            "custom" => {
                let (nu, q) = match (&c.nu, &c.q) {
                    (Some(nu), Some(q)) => (nu.clone(), q.clone()),
                    _ => return Err(Error::Config("custom problems need problem.nu and problem.q".into())),
                };
                let (sigma, r) = match (c.sigma, c.r) {
                    (Some(s), Some(r)) => (s, r),
                    _ => return Err(Error::Config("custom problems need problem.sigma and problem.r".into())),
                };
                let p = ControlProblem::new(
                    Arc::new(SeparablePolynomial::new(nu)?),
                    Arc::new(SeparablePolynomial::new(q)?),
                    sigma,
                    r,
                )?;
                return match c.horizon {
                    Some(t) => p.with_horizon(t),
                    None => Ok(p),
                }
                .map(|p| p.with_name("custom"));
            }
            "lqg_1d" => model::lqg_1d(c.beta.unwrap_or(model::LQG_DEFAULT_BETA))?,
            name => {
                if c.beta.is_some() {
                    return Err(Error::Config("problem.beta only applies to lqg_1d".into()));
                }
                model::builtin_problem(name).map_err(|e| Error::Config(e.to_string()))?
            }
        };
        if c.nu.is_some() || c.q.is_some() {
            return Err(Error::Config("problem.nu and problem.q require name = \"custom\"".into()));
        }
        let mut p = if c.sigma.is_some() || c.r.is_some() {
            let rebuilt = ControlProblem::new(
                base.nu_field().clone(),
                base.q_field().clone(),
                c.sigma.unwrap_or(base.sigma()),
                c.r.unwrap_or(base.r()),
            )?
            .with_name(base.name());
            match base.horizon() {
                Some(t) => rebuilt.with_horizon(t)?,
                None => rebuilt,
            }
        } else {
            base
        };
        if let Some(t) = c.horizon {
            p = p.with_horizon(t)?;
        }
        Ok(p)
    }

    pub fn solver_domain(&self) -> Option<Vec<(f64, f64)>> {
        (!self.solver.domain.is_empty()).then(|| self.solver.domain.iter().map(|&[a, b]| (a, b)).collect())
    }
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form section.key=value")))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::Config(format!("override key `{path}` must be section.key")))?;
    let raw = raw.trim();
    // Values are TOML literals; anything that does not parse is a string.
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let table = doc
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match table {
        toml::Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Config(format!("`{section}` is not a table"))),
    }
}
