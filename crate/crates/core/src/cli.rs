//! Command-line front end. Every subcommand reads one [`RunConfig`] and
//! writes only inside its output directory.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ControllerChoice, DynamicsChoice, InitChoice, RunConfig};
use crate::error::{Error, Result};
use crate::grid::{fmt_f64, GridFunction, RectGrid};
use crate::model::{self, ControlProblem};
use crate::quadrature::{self, QuadGrid, QuadratureArtifact, QuadratureSolution, Terminal};
use crate::simulate::{
    estimate_density, run_finite_horizon_experiment, run_stationary_experiment_on, BinLayout, ControlKind,
    DensityEstimate, Dynamics, FiniteHorizonExperiment, FiniteHorizonReport, InitialDensity, LocalPolicy, Policy,
    QuadraturePolicy, StationaryExperiment, ZeroPolicy,
};
use crate::spectral::{self, SpectralOptions, SpectralSolution};
use crate::transforms::{self, DesignReport, ModifiedPotential};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";
pub const STABILITY_REPORT: &str = "stability_report.json";
pub const CONTROLLER: &str = "controller.json";
pub const SIMULATION_REPORT: &str = "simulation_report.json";

/// Default half-width of the finite-horizon box per axis.
const FINITE_HORIZON_HALF_WIDTH: f64 = 2.0;
/// Default histogram bins per axis.
const DEFAULT_BINS_1D: usize = 60;
const DEFAULT_BINS_ND: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "popcontrol", version, about = "Optimal control of stochastic agent populations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the stationary problem and write spectra, p∞, v∞, u∞ and a stability report.
    Stationary(RunArgs),
    /// Solve the finite-horizon problem and write value surfaces and a reusable controller.
    FiniteHorizon(RunArgs),
    /// Simulate agents under a stored controller and write an experiment report.
    Simulate(RunArgs),
    /// Run a quick built-in oracle suite.
    Validate,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override one field, e.g. `--set solver.points=4000`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (same as `--set output.directory=...`).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Proceed and exit 0 even when the confinement check fails.
    #[arg(long)]
    pub allow_unstable: bool,
    /// Treat truncation warnings as errors.
    #[arg(long)]
    pub strict: bool,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let outcome = match &cli.command {
        Command::Stationary(a) => load(a).and_then(|c| cmd_stationary(&c)),
        Command::FiniteHorizon(a) => load(a).and_then(|c| cmd_finite_horizon(&c)),
        Command::Simulate(a) => load(a).and_then(|c| cmd_simulate(&c)),
        Command::Validate => cmd_validate(),
    };
    match outcome {
        Ok(Outcome::Pass) => EXIT_PASS,
        Ok(Outcome::Fail(msg)) => {
            eprintln!("failed: {msg}");
            EXIT_FAIL
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Verdict of a subcommand that ran to completion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail(String),
}

/// Usage and configuration problems map to 2, everything else to 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Usage(_) | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn load(a: &RunArgs) -> Result<RunConfig> {
    let text = match &a.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = a.overrides.clone();
    if let Some(o) = &a.output {
        overrides.push(format!("output.directory={}", toml_string(&o.to_string_lossy())));
    }
    if a.allow_unstable {
        overrides.push("solver.allow_unstable=true".into());
    }
    if a.strict {
        overrides.push("solver.strict=true".into());
    }
    RunConfig::parse(&text, &overrides)
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Create the output directory and echo the effective configuration into it.
fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output.directory.clone();
    fs::create_dir_all(&dir)?;
    let text = cfg.to_toml()?;
    info!("effective configuration:\n{text}");
    fs::write(dir.join(EFFECTIVE_CONFIG), text)?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_grid(path: &Path, g: &GridFunction) -> Result<()> {
    let mut w = create(path)?;
    g.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn read_grid(path: &Path) -> Result<GridFunction> {
    let file = File::open(path)
        .map_err(|e| Error::Usage(format!("missing controller artifact {}: {e}", path.display())))?;
    GridFunction::read_csv(BufReader::new(file))
}

fn boxes(b: &[[f64; 2]], dim: usize, what: &str) -> Result<Vec<(f64, f64)>> {
    match b.len() {
        1 => Ok(vec![(b[0][0], b[0][1]); dim]),
        n if n == dim => Ok(b.iter().map(|&[lo, hi]| (lo, hi)).collect()),
        n => Err(Error::Config(format!("{what} has {n} intervals for a {dim}-dimensional problem"))),
    }
}

#[derive(Clone, Debug, Serialize)]
struct StabilityReport {
    #[serde(rename = "A1_pass")]
    a1_pass: bool,
    #[serde(rename = "A2_pass")]
    a2_pass: bool,
    #[serde(rename = "A2_min_V")]
    a2_min_v: f64,
    argmin_v: Vec<f64>,
    required_shift: f64,
    a1_failed_directions: Vec<Vec<f64>>,
    lambda0: Option<f64>,
    gap: Option<f64>,
    optimal_cost: Option<f64>,
    boundary_mass: Option<f64>,
    domain: (f64, f64),
    points: usize,
}

fn stationary_domain(cfg: &RunConfig, dim: usize) -> Result<Option<(f64, f64)>> {
    if dim != 1 {
        return Err(Error::Config(format!("the stationary solver is one-dimensional; problem has dimension {dim}")));
    }
    Ok(match cfg.solver_domain() {
        Some(d) => Some(boxes(&cfg.solver.domain, 1, "solver.domain").map(|_| d[0])?),
        None => None,
    })
}

fn solve_stationary(cfg: &RunConfig, problem: &ControlProblem) -> Result<SpectralSolution> {
    let opts = SpectralOptions {
        modes: cfg.solver.modes,
        strict: cfg.solver.strict,
        ..SpectralOptions::default()
    };
    match stationary_domain(cfg, problem.dim())? {
        Some(d) => spectral::solve_eigen(problem, d, cfg.solver.points, &opts),
        None if cfg.solver.auto_domain => spectral::solve_eigen_auto(problem, &opts),
        None => spectral::solve_eigen(problem, spectral::DEFAULT_DOMAIN, cfg.solver.points, &opts),
    }
}

pub fn cmd_stationary(cfg: &RunConfig) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let check_domain = stationary_domain(cfg, problem.dim())?.unwrap_or(spectral::DEFAULT_DOMAIN);
    let dir = prepare_output(cfg)?;
    let design = transforms::check_design_constraints(
        &ModifiedPotential::new(problem.clone()),
        &[check_domain],
        cfg.solver.points,
    )?;
    let report_path = dir.join(STABILITY_REPORT);
    let mut report = stability_report(&design, check_domain, cfg.solver.points);
    if !design.a1_pass && !cfg.solver.allow_unstable {
        write_json(&report_path, &report)?;
        return Ok(Outcome::Fail(format!(
            "confinement check failed along {:?}; see {}",
            design.a1_failed_directions,
            report_path.display()
        )));
    }
    if !design.a2_pass {
        warn!("V is negative (min {:.6e}); a shift of {:.6e} in q restores nonnegativity", design.min_v, design.required_shift);
    }
    let sol = solve_stationary(cfg, &problem)?;
    let summary = sol.summary();
    report.lambda0 = Some(sol.lambda0());
    report.gap = Some(sol.gap());
    report.optimal_cost = Some(summary.optimal_cost);
    report.boundary_mass = Some(summary.boundary_mass);
    report.domain = summary.domain;
    report.points = summary.points;
    write_json(&report_path, &report)?;

    let mut w = create(&dir.join("eigenvalues.csv"))?;
    writeln!(w, "index,lambda")?;
    for (k, l) in sol.eigenvalues().iter().enumerate() {
        writeln!(w, "{k},{}", fmt_f64(*l))?;
    }
    w.flush()?;
    for (k, e) in sol.eigenfunctions().iter().enumerate() {
        write_grid(&dir.join(format!("e_{k}.csv")), e)?;
    }
    let (v, u) = sol.stationary_value_and_control()?;
    write_grid(&dir.join("p_inf.csv"), &sol.stationary_density())?;
    write_grid(&dir.join("v_inf.csv"), &v)?;
    write_grid(&dir.join("u_inf.csv"), &u)?;
    println!(
        "lambda0 = {}, gap = {}, confinement {}, nonnegativity {} (min V {:.6e}, shift {:.6e})",
        fmt_f64(sol.lambda0()),
        fmt_f64(sol.gap()),
        verdict(design.a1_pass),
        verdict(design.a2_pass),
        design.min_v,
        design.required_shift
    );
    Ok(Outcome::Pass)
}

fn stability_report(d: &DesignReport, domain: (f64, f64), points: usize) -> StabilityReport {
    StabilityReport {
        a1_pass: d.a1_pass,
        a2_pass: d.a2_pass,
        a2_min_v: d.min_v,
        argmin_v: d.argmin_v.clone(),
        required_shift: d.required_shift,
        a1_failed_directions: d.a1_failed_directions.clone(),
        lambda0: None,
        gap: None,
        optimal_cost: None,
        boundary_mass: None,
        domain,
        points,
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn horizon_of(cfg: &RunConfig, problem: &ControlProblem) -> Result<f64> {
    problem
        .horizon()
        .ok_or_else(|| Error::Config("finite-horizon runs need problem.horizon".into()))
        .and_then(|t| {
            quadrature::step_count(0.0, t, cfg.solver.dt).map_err(|e| Error::Config(e.to_string()))?;
            Ok(t)
        })
}

fn finite_domain(cfg: &RunConfig, dim: usize) -> Result<Vec<(f64, f64)>> {
    if cfg.solver.domain.is_empty() {
        Ok(vec![(-FINITE_HORIZON_HALF_WIDTH, FINITE_HORIZON_HALF_WIDTH); dim])
    } else {
        boxes(&cfg.solver.domain, dim, "solver.domain")
    }
}

/// Grid times for surfaces: configured ones, or four evenly spaced snapshots.
fn surface_times(cfg: &RunConfig, horizon: f64) -> Vec<f64> {
    if cfg.solver.surface_times.is_empty() {
        let steps = (horizon / cfg.solver.dt).round() as usize;
        (0..4).map(|k| (k * steps / 3) as f64 * cfg.solver.dt).collect()
    } else {
        cfg.solver.surface_times.clone()
    }
}

fn surface_points(domain: &[(f64, f64)], n: usize) -> Result<Vec<Vec<f64>>> {
    let grid = RectGrid::uniform(domain, &vec![n.max(2); domain.len()])?;
    Ok((0..grid.len()).map(|i| grid.point(i)).collect())
}

#[derive(Clone, Debug, Serialize)]
struct FiniteHorizonSummary {
    mode: &'static str,
    horizon: f64,
    dt: f64,
    steps: usize,
    points_per_axis: usize,
    cells: Option<usize>,
    kernel_gain: Option<f64>,
    surface_times: Vec<f64>,
}

pub fn cmd_finite_horizon(cfg: &RunConfig) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let horizon = horizon_of(cfg, &problem)?;
    let domain = finite_domain(cfg, problem.dim())?;
    let times = surface_times(cfg, horizon);
    let dt = cfg.solver.dt;
    for &t in &times {
        if !(0.0..=horizon).contains(&t) || ((t / dt).round() * dt - t).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::Config(format!("surface time {t} is not a grid time in [0, {horizon}] with step {dt}")));
        }
    }
    let dir = prepare_output(cfg)?;
    let points = surface_points(&domain, cfg.solver.surface_points)?;
    let m = cfg.solver.quad_points;
    let steps = quadrature::step_count(0.0, horizon, dt)?;
    let mut summary = FiniteHorizonSummary {
        mode: if cfg.solver.local { "local" } else { "global" },
        horizon,
        dt,
        steps,
        points_per_axis: m,
        cells: None,
        kernel_gain: None,
        surface_times: times.clone(),
    };

    let rows: Vec<quadrature::SurfaceRow> = if cfg.solver.local {
        let per_time: Vec<Vec<quadrature::SurfaceRow>> = times
            .iter()
            .map(|&t| local_surface(&problem, t, &points, m, horizon, dt))
            .collect::<Result<_>>()?;
        per_time.into_iter().flatten().collect()
    } else {
        let grid = QuadGrid::spanning(&domain, m)?;
        let sol = match quadrature::build_on_grid(&problem, grid, 0.0, horizon, dt, Terminal::Natural, cfg.solver.max_cells) {
            Err(Error::Size { cells, cap }) => {
                return Ok(Outcome::Fail(format!(
                    "global grid of {cells} cells exceeds solver.max_cells = {cap}; set solver.local = true"
                )))
            }
            other => other?,
        };
        summary.cells = Some(sol.grid().len());
        summary.kernel_gain = Some(sol.kernel_gain());
        write_json(&dir.join(CONTROLLER), &sol.to_artifact())?;
        let idx: Vec<usize> = times.iter().map(|&t| sol.time_index(t)).collect::<Result<_>>()?;
        quadrature::value_surface(&sol, &idx, &points)?
    };
    write_json(&dir.join("finite_horizon_summary.json"), &summary)?;

    let d = problem.dim();
    let per_snapshot = points.len();
    let mut bad = 0usize;
    for (k, chunk) in rows.chunks(per_snapshot).enumerate() {
        let mut w = create(&dir.join(format!("value_surface_{k}.csv")))?;
        let mut head = vec!["t".to_string()];
        head.extend((1..=d).map(|i| format!("x{i}")));
        head.extend(["f", "v_hat", "v"].map(String::from));
        writeln!(w, "{}", head.join(","))?;
        for r in chunk {
            let mut cols = vec![fmt_f64(r.t)];
            cols.extend(r.x.iter().map(|v| fmt_f64(*v)));
            cols.extend([r.f, r.v_hat, r.v].map(fmt_f64));
            writeln!(w, "{}", cols.join(","))?;
            if !(r.f.is_finite() && r.f > 0.0) {
                bad += 1;
            }
        }
        w.flush()?;
    }
    println!("{} value surfaces written to {}", times.len(), dir.display());
    if bad > 0 {
        return Ok(Outcome::Fail(format!("{bad} surface points have non-positive or non-finite f")));
    }
    Ok(Outcome::Pass)
}

fn local_surface(
    problem: &ControlProblem,
    t: f64,
    points: &[Vec<f64>],
    m: usize,
    horizon: f64,
    dt: f64,
) -> Result<Vec<quadrature::SurfaceRow>> {
    let scale = problem.sigma() * problem.sigma() * problem.r();
    points
        .par_iter()
        .map(|x| {
            let log_f = if horizon - t < 0.5 * dt {
                quadrature::terminal_log_f(problem, &Terminal::Natural, x)?
            } else {
                quadrature::local_solution(problem, &Terminal::Natural, t, x, m, horizon, dt)?.evaluate_at(0, x)?.log_f
            };
            let v_hat = -scale * log_f;
            Ok(quadrature::SurfaceRow {
                t,
                x: x.clone(),
                f: log_f.exp(),
                v_hat,
                v: v_hat - problem.r() * problem.nu(x)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
struct SimulationReport {
    controller: ControllerChoice,
    times: Vec<f64>,
    l1_series: Vec<f64>,
    goal_fractions: Vec<f64>,
    baseline_goal_fractions: Vec<f64>,
    escape_fraction: f64,
    clamped_queries: usize,
    samples: usize,
    passed: bool,
    wall_clock_s: f64,
    seed: u64,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let e = &cfg.experiment;
    let controller_dir = e.controller_dir.clone().unwrap_or_else(|| cfg.output.directory.clone());
    match e.controller {
        ControllerChoice::Stationary => simulate_stationary(cfg, &problem, &controller_dir),
        _ => simulate_finite_horizon(cfg, &problem, &controller_dir),
    }
}

fn snapshot_times(cfg: &RunConfig, horizon: f64, fractions: &[f64]) -> Vec<f64> {
    if cfg.experiment.snapshots.is_empty() {
        fractions.iter().map(|f| f * horizon).collect()
    } else {
        cfg.experiment.snapshots.clone()
    }
}

fn bin_layout(cfg: &RunConfig, default: Vec<(f64, f64)>) -> Result<BinLayout> {
    let d = default.len();
    let bounds = if cfg.experiment.bin_domain.is_empty() {
        default
    } else {
        boxes(&cfg.experiment.bin_domain, d, "experiment.bin_domain")?
    };
    let bins = match cfg.experiment.bins.len() {
        0 => vec![if d == 1 { DEFAULT_BINS_1D } else { DEFAULT_BINS_ND }; d],
        1 => vec![cfg.experiment.bins[0]; d],
        n if n == d => cfg.experiment.bins.clone(),
        n => return Err(Error::Config(format!("experiment.bins has {n} entries for dimension {d}"))),
    };
    BinLayout::new(bounds, bins)
}

fn simulate_stationary(cfg: &RunConfig, problem: &ControlProblem, from: &Path) -> Result<Outcome> {
    if problem.dim() != 1 {
        return Err(Error::Config("stationary simulation needs a one-dimensional problem".into()));
    }
    let e = &cfg.experiment;
    let u = read_grid(&from.join("u_inf.csv"))?;
    let p_inf = read_grid(&from.join("p_inf.csv"))?;
    let horizon = match e.horizon {
        Some(t) => t,
        None => {
            let path = from.join(STABILITY_REPORT);
            let text = fs::read_to_string(&path)
                .map_err(|err| Error::Usage(format!("missing controller artifact {}: {err}", path.display())))?;
            let gap = serde_json::from_str::<serde_json::Value>(&text)?["gap"]
                .as_f64()
                .ok_or_else(|| Error::Usage(format!("{} has no spectral gap", path.display())))?;
            (5.0 / gap / e.dt).round() * e.dt
        }
    };
    let init = match e.init {
        InitChoice::Uniform => InitialDensity::Uniform(boxes(&e.init_box, 1, "experiment.init_box")?),
        InitChoice::Stationary => InitialDensity::Grid(p_inf.clone()),
    };
    let exp = StationaryExperiment {
        agents: e.agents,
        realizations: e.realizations,
        horizon,
        dt: e.dt,
        snapshots: snapshot_times(cfg, horizon, &[0.0, 0.2, 0.5, 1.0]),
        bins: bin_layout(cfg, u.grid().bounds())?,
        init,
        seed: e.seed,
        l1_threshold: e.l1_threshold,
        max_escape: e.max_escape,
    };
    let dir = prepare_output(cfg)?;
    let rep = run_stationary_experiment_on(problem, u, &p_inf, &exp)?;
    for (k, (t, est)) in rep.times.iter().zip(&rep.snapshots).enumerate() {
        write_histogram(&dir.join(format!("snapshot_{k}.csv")), *t, est)?;
    }
    write_histogram(&dir.join("reference.csv"), horizon, &rep.reference)?;
    let report = SimulationReport {
        controller: ControllerChoice::Stationary,
        times: rep.times.clone(),
        l1_series: rep.l1_series.clone(),
        goal_fractions: Vec::new(),
        baseline_goal_fractions: Vec::new(),
        escape_fraction: rep.escape_fraction,
        clamped_queries: rep.clamped_queries,
        samples: rep.samples,
        passed: rep.passed,
        wall_clock_s: rep.wall_clock_s,
        seed: rep.seed,
    };
    write_json(&dir.join(SIMULATION_REPORT), &report)?;
    println!("L1 series {:?}, escapes {}", rep.l1_series, rep.escape_fraction);
    Ok(if rep.passed {
        Outcome::Pass
    } else {
        Outcome::Fail(format!(
            "terminal L1 {:?} (threshold {}), escape fraction {} (max {})",
            rep.l1_series.last(),
            e.l1_threshold,
            rep.escape_fraction,
            e.max_escape
        ))
    })
}

fn simulate_finite_horizon(cfg: &RunConfig, problem: &ControlProblem, from: &Path) -> Result<Outcome> {
    let e = &cfg.experiment;
    let d = problem.dim();
    let horizon = match (e.horizon, problem.horizon()) {
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => return Err(Error::Config("set experiment.horizon or problem.horizon".into())),
    };
    let (dynamics, kind) = match e.dynamics {
        DynamicsChoice::Langevin => (Dynamics::Langevin, ControlKind::Optimal),
        DynamicsChoice::Integrator => (Dynamics::Integrator, ControlKind::Integrator),
    };
    let policy: Box<dyn Policy> = match e.controller {
        ControllerChoice::None => Box::new(ZeroPolicy),
        ControllerChoice::Quadrature => {
            let path = from.join(CONTROLLER);
            let file = File::open(&path)
                .map_err(|err| Error::Usage(format!("missing controller artifact {}: {err}", path.display())))?;
            let art: QuadratureArtifact = serde_json::from_reader(BufReader::new(file))?;
            let sol = QuadratureSolution::from_artifact(problem, art, Terminal::Natural)?;
            Box::new(QuadraturePolicy::new(Arc::new(sol), kind))
        }
        ControllerChoice::Local => Box::new(LocalPolicy {
            problem: problem.clone(),
            terminal: Terminal::Natural,
            points: cfg.solver.quad_points,
            horizon,
            dt: cfg.solver.dt,
            kind,
        }),
        ControllerChoice::Stationary => unreachable!("handled by simulate_stationary"),
    };
    if e.goals.iter().any(|g| g.len() != d) {
        return Err(Error::Config(format!("experiment.goals must be {d}-dimensional points")));
    }
    let init_box = boxes(&e.init_box, d, "experiment.init_box")?;
    let exp = FiniteHorizonExperiment {
        agents: e.agents,
        horizon,
        dt: e.dt,
        snapshots: snapshot_times(cfg, horizon, &[0.0, 0.25, 0.5, 0.75, 1.0]),
        goals: e.goals.clone(),
        radius: e.radius,
        init: InitialDensity::Uniform(init_box.clone()),
        seed: e.seed,
        dynamics,
        max_escape: e.max_escape,
    };
    let dir = prepare_output(cfg)?;
    let rep = run_finite_horizon_experiment(problem, policy.as_ref(), &exp)?;
    let baseline = match e.controller {
        ControllerChoice::None => None,
        _ => Some(run_finite_horizon_experiment(problem, &ZeroPolicy, &exp)?),
    };
    let layout = bin_layout(cfg, policy.domain().unwrap_or(init_box))?;
    for (k, (t, states)) in rep.times.iter().zip(&rep.states).enumerate() {
        write_histogram(&dir.join(format!("snapshot_{k}.csv")), *t, &estimate_density(states, d, &layout)?)?;
    }
    if e.trajectories {
        write_trajectories(&dir.join("trajectories.csv"), &rep, d)?;
        if let Some(b) = &baseline {
            write_trajectories(&dir.join("baseline_trajectories.csv"), b, d)?;
        }
    }
    let final_goal = rep.goal_fractions.last().copied().unwrap_or(0.0);
    let final_base = baseline.as_ref().and_then(|b| b.goal_fractions.last().copied());
    let lead_ok = match final_base {
        Some(b) if !e.goals.is_empty() => final_goal >= b + e.goal_margin,
        _ => true,
    };
    let passed = lead_ok && rep.escape_fraction <= e.max_escape;
    let report = SimulationReport {
        controller: e.controller,
        times: rep.times.clone(),
        l1_series: Vec::new(),
        goal_fractions: rep.goal_fractions.clone(),
        baseline_goal_fractions: baseline.map(|b| b.goal_fractions).unwrap_or_default(),
        escape_fraction: rep.escape_fraction,
        clamped_queries: rep.clamped_queries,
        samples: e.agents,
        passed,
        wall_clock_s: rep.wall_clock_s,
        seed: rep.seed,
    };
    write_json(&dir.join(SIMULATION_REPORT), &report)?;
    println!(
        "goal fractions {:?} (uncontrolled {:?}), escapes {}",
        report.goal_fractions, report.baseline_goal_fractions, report.escape_fraction
    );
    Ok(if passed {
        Outcome::Pass
    } else {
        Outcome::Fail(format!(
            "terminal goal fraction {final_goal} vs uncontrolled {final_base:?} (margin {}), escape fraction {}",
            e.goal_margin, rep.escape_fraction
        ))
    })
}

fn write_histogram(path: &Path, t: f64, est: &DensityEstimate) -> Result<()> {
    let d = est.layout.dim();
    let mut w = create(path)?;
    let mut head = vec!["t".to_string()];
    head.extend((1..=d).map(|i| format!("x{i}")));
    head.push("density".into());
    writeln!(w, "{}", head.join(","))?;
    for (i, p) in est.density.iter().enumerate() {
        let mut cols = vec![fmt_f64(t)];
        cols.extend(est.layout.center(i).iter().map(|v| fmt_f64(*v)));
        cols.push(fmt_f64(*p));
        writeln!(w, "{}", cols.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn write_trajectories(path: &Path, rep: &FiniteHorizonReport, d: usize) -> Result<()> {
    let mut w = create(path)?;
    let mut head = vec!["agent".to_string(), "t".to_string()];
    head.extend((1..=d).map(|i| format!("x{i}")));
    writeln!(w, "{}", head.join(","))?;
    for (t, states) in rep.times.iter().zip(&rep.states) {
        for (a, x) in states.chunks(d).enumerate() {
            let mut cols = vec![a.to_string(), fmt_f64(*t)];
            cols.extend(x.iter().map(|v| fmt_f64(*v)));
            writeln!(w, "{}", cols.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Quick oracle checks; prints one line per check.
pub fn cmd_validate() -> Result<Outcome> {
    let checks: Vec<(&str, Result<(bool, String)>)> = vec![
        ("harmonic ground state", validate_harmonic()),
        ("Riccati value", validate_riccati()),
        ("Gauss-Hermite moments", validate_moments()),
        ("value transform round trip", validate_round_trip()),
    ];
    let mut failed = Vec::new();
    for (name, r) in checks {
        let (ok, detail) = r.unwrap_or_else(|e| (false, e.to_string()));
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(name);
        }
    }
    Ok(if failed.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("checks failed: {}", failed.join(", ")))
    })
}

fn validate_harmonic() -> Result<(bool, String)> {
    let p = model::uncontrolled_gibbs_1d()?;
    let sol = spectral::solve_eigen(&p, (-8.0, 8.0), 1000, &SpectralOptions::default())?;
    // Uncontrolled agents pay only the constant cost, so λ₀ = q and the gap is 1.
    let (lambda0, gap) = (sol.lambda0(), sol.gap());
    let ok = (lambda0 - model::GIBBS_CONSTANT_COST).abs() < 1e-3 && (gap - 1.0).abs() < 1e-3;
    Ok((ok, format!("lambda0 = {lambda0:.6}, gap = {gap:.6}")))
}

fn validate_riccati() -> Result<(bool, String)> {
    let beta = model::LQG_DEFAULT_BETA;
    let p = model::lqg_1d(beta)?;
    let sol = spectral::solve_eigen(&p, (-8.0, 8.0), 1000, &SpectralOptions::default())?;
    let (v, _) = sol.stationary_value_and_control()?;
    // Stationary value a·x²/2 + const with a = R(−1 + √(1 + 2β/R)).
    let a = -1.0 + (1.0 + 2.0 * beta).sqrt();
    let at = |x: f64| v.interpolate(&[x]).0;
    let curvature = (at(1.0) - 2.0 * at(0.0) + at(-1.0)) / 1.0;
    let ok = (curvature - a).abs() < 1e-3;
    Ok((ok, format!("curvature {curvature:.6} vs {a:.6}")))
}

fn validate_moments() -> Result<(bool, String)> {
    let (c, s) = (0.3, 0.7);
    let g = QuadGrid::gaussian(&[c], &[s], 8)?;
    let pdf = |x: f64| (-0.5 * ((x - c) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    let moment = |k: i32| -> f64 { (0..g.len()).map(|i| g.weight(i) * pdf(g.nodes[0][i]) * (g.nodes[0][i] - c).powi(k)).sum() };
    let (m0, m2) = (moment(0), moment(2));
    let err = (m0 - 1.0).abs().max((m2 - s * s).abs());
    Ok((err < 1e-12, format!("max moment error {err:.1e}")))
}

fn validate_round_trip() -> Result<(bool, String)> {
    let p = model::cubic_1d()?;
    let grid = RectGrid::uniform_1d(-2.0, 2.0, 81)?;
    let v = GridFunction::from_fn(grid, |x| Ok(x[0] * x[0] - 0.3 * x[0]))?;
    let back = transforms::f_to_value(&transforms::value_to_f(&v, &p)?, &p)?;
    let err = v.values().iter().zip(back.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((err < 1e-10, format!("max deviation {err:.1e}")))
}
