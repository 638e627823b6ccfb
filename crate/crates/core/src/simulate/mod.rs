//! Monte-Carlo agent ensembles integrated by Euler–Maruyama.
//!
//! Every agent draws from its own ChaCha stream (seed shared, stream id =
//! agent index), so trajectories do not depend on how the ensemble is
//! scheduled across threads.

pub mod density;

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::model::ControlProblem;
use crate::quadrature::{self, QuadratureSolution, Terminal};
use crate::spectral::SpectralSolution;

pub use density::{estimate_density, l1_distance, BinLayout, DensityEstimate};

/// Feedback law `u(t, x)`.
pub trait Policy: Send + Sync {
    /// Writes `u(t, x)` into `out`; returns `true` when `x` had to be
    /// clamped into the policy's domain.
    fn control(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<bool>;

    /// Box on which the policy is defined, if bounded.
    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

/// `u ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroPolicy;

impl Policy for ZeroPolicy {
    fn control(&self, _t: f64, _x: &[f64], out: &mut [f64]) -> Result<bool> {
        out.iter_mut().for_each(|v| *v = 0.0);
        Ok(false)
    }
}

/// Policy from a closure.
pub struct FnPolicy<F>(pub F);

impl<F> Policy for FnPolicy<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync,
{
    fn control(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<bool> {
        (self.0)(t, x, out)?;
        Ok(false)
    }
}

/// Time-invariant 1D control interpolated from a grid (e.g. `u∞`).
#[derive(Clone, Debug)]
pub struct GridPolicy {
    u: GridFunction,
}

impl GridPolicy {
    pub fn new(u: GridFunction) -> Self {
        Self { u }
    }

    pub fn stationary(sol: &SpectralSolution) -> Result<Self> {
        Ok(Self::new(sol.stationary_value_and_control()?.1))
    }
}

impl Policy for GridPolicy {
    fn control(&self, _t: f64, x: &[f64], out: &mut [f64]) -> Result<bool> {
        let (v, clamped) = self.u.interpolate(x);
        out[0] = v;
        Ok(clamped)
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        Some(self.u.grid().bounds())
    }
}

/// Which control a quadrature solution supplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ControlKind {
    /// `u* = σ²∇f/f + ∇ν`, for Langevin agents.
    Optimal,
    /// `û = σ²∇f/f`, for integrator agents.
    Integrator,
}

/// Control from a precomputed global quadrature solution.
#[derive(Clone, Debug)]
pub struct QuadraturePolicy {
    sol: Arc<QuadratureSolution>,
    kind: ControlKind,
}

impl QuadraturePolicy {
    pub fn new(sol: Arc<QuadratureSolution>, kind: ControlKind) -> Self {
        Self { sol, kind }
    }

    fn index(&self, t: f64) -> usize {
        let s = (t - self.sol.t0()) / self.sol.dt();
        ((s + 1e-9).floor().max(0.0) as usize).min(self.sol.steps() - 1)
    }
}

impl Policy for QuadraturePolicy {
    fn control(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<bool> {
        let bounds = self.sol.grid().bounds();
        let mut y = x.to_vec();
        let mut clamped = false;
        for (v, &(lo, hi)) in y.iter_mut().zip(&bounds) {
            if *v < lo || *v > hi {
                *v = v.clamp(lo, hi);
                clamped = true;
            }
        }
        let n = self.index(t);
        let u = match self.kind {
            ControlKind::Optimal => self.sol.control_at(n, &y)?,
            ControlKind::Integrator => self.sol.evaluate_at(n, &y)?.integrator_control,
        };
        out.copy_from_slice(&u);
        Ok(clamped)
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        Some(self.sol.grid().bounds())
    }
}

/// Control from a fresh grid centred at each query point.
#[derive(Clone, Debug)]
pub struct LocalPolicy {
    pub problem: ControlProblem,
    pub terminal: Terminal,
    pub points: usize,
    pub horizon: f64,
    pub dt: f64,
    pub kind: ControlKind,
}

impl Policy for LocalPolicy {
    fn control(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<bool> {
        let t = (t / self.dt).round() * self.dt;
        let mut u = quadrature::local_control(&self.problem, &self.terminal, t, x, self.points, self.horizon, self.dt)?;
        if self.kind == ControlKind::Integrator {
            let mut g = vec![0.0; x.len()];
            self.problem.grad_nu(x, &mut g)?;
            for (a, b) in u.iter_mut().zip(&g) {
                *a -= b;
            }
        }
        out.copy_from_slice(&u);
        Ok(false)
    }
}

/// Open-loop dynamics the control acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Dynamics {
    /// `dx = (−∇ν + u)dt + σ dw`.
    Langevin,
    /// `dx = u dt + σ dw`.
    Integrator,
}

/// Agent states with one random stream per agent.
#[derive(Clone, Debug)]
pub struct Ensemble {
    dim: usize,
    states: Vec<f64>,
    rngs: Vec<ChaCha8Rng>,
    escaped: Vec<bool>,
    time: f64,
    steps: usize,
    seed: u64,
}

/// How initial states are drawn.
#[derive(Clone, Debug)]
pub enum InitialDensity {
    Uniform(Vec<(f64, f64)>),
    /// 1D density sampled by inverse CDF of its linear interpolant.
    Grid(GridFunction),
    /// Every agent starts at the same point.
    Point(Vec<f64>),
}

impl InitialDensity {
    fn dim(&self) -> usize {
        match self {
            InitialDensity::Uniform(b) => b.len(),
            InitialDensity::Grid(g) => g.grid().dim(),
            InitialDensity::Point(p) => p.len(),
        }
    }
}

/// Inverse-CDF sampler for a nonnegative 1D grid density.
struct GridSampler {
    xs: Vec<f64>,
    ps: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridSampler {
    fn new(p: &GridFunction) -> Result<Self> {
        if p.grid().dim() != 1 {
            return Err(Error::Usage("grid initial densities must be one-dimensional".into()));
        }
        let xs = p.grid().axis(0).to_vec();
        let ps: Vec<f64> = p.values().iter().map(|v| v.max(0.0)).collect();
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (ps[i] + ps[i - 1]) * (xs[i] - xs[i - 1]);
        }
        let total = cdf[xs.len() - 1];
        if !(total > 0.0) {
            return Err(Error::Usage("initial density has no mass".into()));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        let ps = ps.iter().map(|v| v / total).collect();
        Ok(Self { xs, ps, cdf })
    }

    fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (p0, p1) = (self.ps[i - 1], self.ps[i]);
        let h = x1 - x0;
        let r = u - self.cdf[i - 1];
        // Solve p0·s + (p1−p0)s²/(2h) = r for the offset s in [0, h].
        let a = 0.5 * (p1 - p0) / h;
        let s = if a.abs() < 1e-14 * p0.max(1e-300) {
            if p0 > 0.0 { r / p0 } else { 0.5 * h }
        } else {
            let disc = (p0 * p0 + 4.0 * a * r).max(0.0);
            2.0 * r / (p0 + disc.sqrt())
        };
        x0 + s.clamp(0.0, h)
    }
}

impl Ensemble {
    /// `n` agents drawn from `init`, each from its own stream of `seed`.
    pub fn sample(n: usize, init: &InitialDensity, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Usage("ensemble needs at least one agent".into()));
        }
        let dim = init.dim();
        let sampler = match init {
            InitialDensity::Grid(g) => Some(GridSampler::new(g)?),
            _ => None,
        };
        let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| agent_rng(seed, i)).collect();
        let mut states = vec![0.0; n * dim];
        for (x, rng) in states.chunks_mut(dim).zip(rngs.iter_mut()) {
            match init {
                InitialDensity::Uniform(b) => {
                    for (v, &(lo, hi)) in x.iter_mut().zip(b) {
                        *v = rng.gen_range(lo..hi);
                    }
                }
                InitialDensity::Grid(_) => x[0] = sampler.as_ref().expect("sampler built").sample(rng.gen()),
                InitialDensity::Point(p) => x.copy_from_slice(p),
            }
        }
        Ok(Self {
            dim,
            states,
            rngs,
            escaped: vec![false; n],
            time: 0.0,
            steps: 0,
            seed,
        })
    }

    /// Ensemble with explicit initial states (row-major `n × dim`).
    pub fn from_states(states: Vec<f64>, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 || states.is_empty() || !states.len().is_multiple_of(dim) {
            return Err(Error::Usage("states must be a nonempty n × dim array".into()));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::Usage("initial states must be finite".into()));
        }
        let n = states.len() / dim;
        Ok(Self {
            dim,
            states,
            rngs: (0..n).map(|i| agent_rng(seed, i)).collect(),
            escaped: vec![false; n],
            time: 0.0,
            steps: 0,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn states(&self) -> &[f64] {
        &self.states
    }
    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    /// Fraction of agents that have left the policy domain at least once.
    pub fn escape_fraction(&self) -> f64 {
        self.escaped.iter().filter(|&&e| e).count() as f64 / self.len() as f64
    }

    /// Fraction of agents within `radius` of any of `points`.
    pub fn fraction_near(&self, points: &[Vec<f64>], radius: f64) -> f64 {
        let hits = self
            .states
            .chunks(self.dim)
            .filter(|x| points.iter().any(|p| dist(x, p) <= radius))
            .count();
        hits as f64 / self.len() as f64
    }
}

fn agent_rng(seed: u64, agent: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(agent as u64);
    rng
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Euler–Maruyama integrator for one problem and dynamics.
#[derive(Clone, Debug)]
pub struct Simulator {
    problem: ControlProblem,
    dynamics: Dynamics,
    sigma: f64,
    dt: f64,
}

/// Bookkeeping from one step.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    /// Agents whose control query was clamped into the policy domain.
    pub clamped: usize,
}

impl Simulator {
    pub fn new(problem: &ControlProblem, dynamics: Dynamics, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Usage(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            problem: problem.clone(),
            dynamics,
            sigma: problem.sigma(),
            dt,
        })
    }

    /// Replace the noise level (`0` gives deterministic flows).
    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `x ← x + (drift + u)dt + σ√dt·ε` for every agent.
    pub fn step(&self, ens: &mut Ensemble, policy: &dyn Policy) -> Result<StepStats> {
        if ens.dim != self.problem.dim() {
            return Err(Error::Usage("ensemble and problem dimensions disagree".into()));
        }
        let d = ens.dim;
        let t = ens.time;
        let sq = self.sigma * self.dt.sqrt();
        let domain = policy.domain();
        let results: Vec<Result<(bool, bool)>> = ens
            .states
            .par_chunks_mut(d)
            .zip(ens.rngs.par_iter_mut())
            .enumerate()
            .map(|(i, (x, rng))| {
                let wrap = |e: Error, x: &[f64]| Error::Agent {
                    agent: i,
                    state: x.to_vec(),
                    source: Box::new(e),
                };
                let mut u = vec![0.0; d];
                let clamped = policy.control(t, x, &mut u).map_err(|e| wrap(e, x))?;
                let mut drift = vec![0.0; d];
                if self.dynamics == Dynamics::Langevin {
                    self.problem.drift_into(x, &mut drift).map_err(|e| wrap(e, x))?;
                }
                for k in 0..d {
                    let eps: f64 = rng.sample(StandardNormal);
                    x[k] += (drift[k] + u[k]) * self.dt + sq * eps;
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(wrap(Error::Numerical("state became non-finite".into()), x));
                }
                let outside = domain
                    .as_ref()
                    .is_some_and(|b| b.iter().zip(x.iter()).any(|(&(lo, hi), &v)| v < lo || v > hi));
                Ok((clamped, outside))
            })
            .collect();
        let mut stats = StepStats::default();
        for (i, r) in results.into_iter().enumerate() {
            let (clamped, outside) = r?;
            stats.clamped += clamped as usize;
            ens.escaped[i] |= outside;
        }
        ens.steps += 1;
        ens.time = ens.steps as f64 * self.dt;
        Ok(stats)
    }

    /// Step until `t_end`.
    pub fn run(&self, ens: &mut Ensemble, policy: &dyn Policy, t_end: f64) -> Result<()> {
        let n = ((t_end - ens.time) / self.dt).round().max(0.0) as usize;
        for _ in 0..n {
            self.step(ens, policy)?;
        }
        Ok(())
    }
}

/// Snapshot step indices for the requested times on a `dt` lattice.
fn snapshot_steps(times: &[f64], dt: f64) -> Vec<usize> {
    times.iter().map(|t| (t / dt).round() as usize).collect()
}

/// Parameters for a stationary-control run.
#[derive(Clone, Debug)]
pub struct StationaryExperiment {
    pub agents: usize,
    pub realizations: usize,
    pub horizon: f64,
    pub dt: f64,
    pub snapshots: Vec<f64>,
    pub bins: BinLayout,
    pub init: InitialDensity,
    pub seed: u64,
    pub l1_threshold: f64,
    pub max_escape: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryReport {
    pub times: Vec<f64>,
    pub l1_series: Vec<f64>,
    pub snapshots: Vec<DensityEstimate>,
    pub reference: DensityEstimate,
    pub samples: usize,
    pub escape_fraction: f64,
    pub clamped_queries: usize,
    pub monotone_after_first: bool,
    pub passed: bool,
    pub wall_clock_s: f64,
    pub seed: u64,
}

/// Simulate `agents × realizations` samples under the stationary control
/// and compare snapshot histograms with the binned `p∞`.
pub fn run_stationary_experiment(
    problem: &ControlProblem,
    sol: &SpectralSolution,
    cfg: &StationaryExperiment,
) -> Result<StationaryReport> {
    let (_, u) = sol.stationary_value_and_control()?;
    run_stationary_experiment_on(problem, u, &sol.stationary_density(), cfg)
}

/// As [`run_stationary_experiment`], from a gridded control and density.
pub fn run_stationary_experiment_on(
    problem: &ControlProblem,
    control: GridFunction,
    p_inf: &GridFunction,
    cfg: &StationaryExperiment,
) -> Result<StationaryReport> {
    let start = Instant::now();
    let policy = GridPolicy::new(control);
    let reference = DensityEstimate::from_grid_function(&cfg.bins, p_inf)?;
    let samples = cfg.agents * cfg.realizations;
    let mut ens = Ensemble::sample(samples, &cfg.init, cfg.seed)?;
    let sim = Simulator::new(problem, Dynamics::Langevin, cfg.dt)?;
    let marks = snapshot_steps(&cfg.snapshots, cfg.dt);
    let last = marks.iter().copied().max().unwrap_or(0);
    let mut snapshots = Vec::new();
    let mut l1_series = Vec::new();
    let mut clamped = 0;
    for step in 0..=last {
        if marks.contains(&step) {
            let est = estimate_density(ens.states(), ens.dim(), &cfg.bins)?;
            l1_series.push(l1_distance(&est, &reference)?);
            snapshots.push(est);
        }
        if step < last {
            clamped += sim.step(&mut ens, &policy)?.clamped;
        }
    }
    let monotone_after_first = l1_series.windows(2).skip(1).all(|w| w[1] <= w[0]);
    let escape_fraction = ens.escape_fraction();
    let passed = l1_series.last().is_some_and(|&l| l <= cfg.l1_threshold) && escape_fraction <= cfg.max_escape;
    Ok(StationaryReport {
        times: marks.iter().map(|&s| s as f64 * cfg.dt).collect(),
        l1_series,
        snapshots,
        reference,
        samples,
        escape_fraction,
        clamped_queries: clamped,
        monotone_after_first,
        passed,
        wall_clock_s: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
    })
}

/// Parameters for a finite-horizon run.
#[derive(Clone, Debug)]
pub struct FiniteHorizonExperiment {
    pub agents: usize,
    pub horizon: f64,
    pub dt: f64,
    pub snapshots: Vec<f64>,
    pub goals: Vec<Vec<f64>>,
    pub radius: f64,
    pub init: InitialDensity,
    pub seed: u64,
    pub dynamics: Dynamics,
    pub max_escape: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteHorizonReport {
    pub times: Vec<f64>,
    /// Fraction within `radius` of any goal, per snapshot.
    pub goal_fractions: Vec<f64>,
    /// Per-snapshot agent states (row-major).
    pub states: Vec<Vec<f64>>,
    pub escape_fraction: f64,
    pub clamped_queries: usize,
    pub wall_clock_s: f64,
    pub seed: u64,
}

impl FiniteHorizonReport {
    /// Fraction of agents within `radius` of `point` at snapshot `k`.
    pub fn fraction_near(&self, k: usize, point: &[f64], radius: f64) -> f64 {
        let d = point.len();
        let s = &self.states[k];
        s.chunks(d).filter(|x| dist(x, point) <= radius).count() as f64 / (s.len() / d) as f64
    }
}

pub fn run_finite_horizon_experiment(
    problem: &ControlProblem,
    policy: &dyn Policy,
    cfg: &FiniteHorizonExperiment,
) -> Result<FiniteHorizonReport> {
    let start = Instant::now();
    let mut ens = Ensemble::sample(cfg.agents, &cfg.init, cfg.seed)?;
    let sim = Simulator::new(problem, cfg.dynamics, cfg.dt)?;
    let marks = snapshot_steps(&cfg.snapshots, cfg.dt);
    let last = marks.iter().copied().max().unwrap_or(0);
    let mut goal_fractions = Vec::new();
    let mut states = Vec::new();
    let mut clamped = 0;
    for step in 0..=last {
        if marks.contains(&step) {
            goal_fractions.push(ens.fraction_near(&cfg.goals, cfg.radius));
            states.push(ens.states().to_vec());
        }
        if step < last {
            clamped += sim.step(&mut ens, policy)?.clamped;
        }
    }
    Ok(FiniteHorizonReport {
        times: marks.iter().map(|&s| s as f64 * cfg.dt).collect(),
        goal_fractions,
        states,
        escape_fraction: ens.escape_fraction(),
        clamped_queries: clamped,
        wall_clock_s: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
    })
}
