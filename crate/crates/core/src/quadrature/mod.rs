//! Finite-horizon path-integral solver.
//!
//! `f(t, x̄) = E[exp(−∫V/(σ²R)) f(T, x_T)]` over the driftless diffusion
//! `dx = σ dw` is discretized with time step `δt` and a fixed Gauss-Hermite
//! grid `{ξᵢ}` with Lebesgue weights `αᵢ`:
//!
//! * `φ₀ⁱ(x̄) = w(x̄)·N(ξᵢ; x̄, σ²δt)` with `w = exp(−Vδt/(σ²R))`
//! * `f(tₙ, x̄) = Σᵢ bᵢ⁽ⁿ⁺¹⁾ φ₀ⁱ(x̄)`
//! * `b⁽ᴺ⁾ = α ⊙ f(T, ξ)` and `b⁽ⁿ⁾ = Γ Φ̃ᵀ b⁽ⁿ⁺¹⁾`, `Γ = diag(α ⊙ w(ξ))`,
//!   `Φ̃ᵢⱼ = N(ξᵢ; ξⱼ, σ²δt)`
//!
//! Messages are rescaled to unit maximum after every step and the log
//! factors kept in a ledger, so long horizons with large `V` never
//! underflow. The Gaussian transition factorizes over axes, so `Φ̃` is
//! applied one axis at a time.

pub mod gauss_hermite;

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use log::log;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ControlProblem, ScalarField};
use crate::transforms::{ModifiedPotential, POSITIVITY_FLOOR};

pub use gauss_hermite::{gauss_hermite, HermiteRule, QuadGrid};

/// Default cap on the number of tensor-grid cells.
static RESOLUTION_WARNED: AtomicBool = AtomicBool::new(false);

pub const DEFAULT_MAX_CELLS: usize = 1_000_000;

/// Log-density of an arbitrary terminal condition.
pub type LogTerminal = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Terminal condition `f(T, ·)`.
#[derive(Clone, Default)]
pub enum Terminal {
    /// No terminal cost: `f(T, x) = exp(−ν/σ²)`.
    #[default]
    Natural,
    /// Terminal cost `φ`: `f(T, x) = exp(−(φ + Rν)/(σ²R))`.
    Cost(Arc<dyn ScalarField>),
    /// Arbitrary `ln f(T, x)`; `−∞` is allowed and means `f(T, x) = 0`.
    LogF(LogTerminal),
}

impl fmt::Debug for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Natural => write!(f, "Natural"),
            Terminal::Cost(c) => f.debug_tuple("Cost").field(c).finish(),
            Terminal::LogF(_) => write!(f, "LogF(..)"),
        }
    }
}

pub fn terminal_log_f(problem: &ControlProblem, terminal: &Terminal, x: &[f64]) -> Result<f64> {
    let s2 = problem.sigma() * problem.sigma();
    let v = match terminal {
        Terminal::Natural => -problem.nu(x)? / s2,
        Terminal::Cost(phi) => {
            let c = phi.value(x);
            if !c.is_finite() {
                return Err(Error::Evaluation {
                    field: "terminal cost".into(),
                    location: x.to_vec(),
                    value: c,
                });
            }
            -(c + problem.r() * problem.nu(x)?) / (s2 * problem.r())
        }
        Terminal::LogF(g) => g(x),
    };
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::Evaluation {
            field: "terminal log f".into(),
            location: x.to_vec(),
            value: v,
        });
    }
    Ok(v)
}

/// `f(T, x)`; a range error when it overflows.
pub fn terminal_f(problem: &ControlProblem, terminal: &Terminal, x: &[f64]) -> Result<f64> {
    let f = terminal_log_f(problem, terminal, x)?.exp();
    if !f.is_finite() {
        return Err(Error::Range {
            what: "terminal f".into(),
            location: x.to_vec(),
        });
    }
    Ok(f)
}

/// Precomputed backward messages on a fixed grid.
#[derive(Clone, Debug)]
pub struct QuadratureSolution {
    problem: ControlProblem,
    potential: ModifiedPotential,
    terminal: Terminal,
    grid: QuadGrid,
    t0: f64,
    dt: f64,
    steps: usize,
    /// Per-axis `Φ̃` (row-major `M × M`), symmetric.
    kernels: Vec<Vec<f64>>,
    log_w: Vec<f64>,
    /// `messages[n]` is `b⁽ⁿ⁺¹⁾ · exp(−log_scale[n])`.
    messages: Vec<Vec<f64>>,
    log_scale: Vec<f64>,
}

/// Serializable snapshot of a solution; the problem is referenced by name.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadratureArtifact {
    pub problem: String,
    pub t0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub steps: usize,
    pub grid: QuadGrid,
    pub log_w: Vec<f64>,
    pub messages: Vec<Vec<f64>>,
    pub log_scale: Vec<f64>,
}

/// Build on a Gauss-Hermite grid of `m` points per axis spanning `domain`,
/// from `t = 0` to `horizon`, with the natural terminal condition.
pub fn build(
    problem: &ControlProblem,
    domain: &[(f64, f64)],
    m: usize,
    horizon: f64,
    dt: f64,
) -> Result<QuadratureSolution> {
    let grid = QuadGrid::spanning(domain, m)?;
    build_on_grid(problem, grid, 0.0, horizon, dt, Terminal::Natural, DEFAULT_MAX_CELLS)
}

/// Number of steps `N` with `N·dt = horizon − t0`.
pub fn step_count(t0: f64, horizon: f64, dt: f64) -> Result<usize> {
    let span = horizon - t0;
    if !(dt > 0.0) || !(span > 0.0) {
        return Err(Error::Usage(format!("need dt > 0 and t0 < T, got dt={dt}, [{t0}, {horizon}]")));
    }
    let n = (span / dt).round();
    if n < 1.0 || (n * dt - span).abs() > 1e-12 * span.max(1.0) {
        return Err(Error::Usage(format!("dt = {dt} does not divide the horizon {span}")));
    }
    Ok(n as usize)
}

pub fn build_on_grid(
    problem: &ControlProblem,
    grid: QuadGrid,
    t0: f64,
    horizon: f64,
    dt: f64,
    terminal: Terminal,
    max_cells: usize,
) -> Result<QuadratureSolution> {
    if grid.dim() != problem.dim() {
        return Err(Error::Usage("quadrature grid and problem dimensions disagree".into()));
    }
    let m = grid.points_per_axis();
    if m < 2 || grid.nodes.iter().any(|a| a.len() != m) {
        return Err(Error::Usage("quadrature grid needs the same m >= 2 points on every axis".into()));
    }
    let cells = grid.len();
    if cells > max_cells {
        return Err(Error::Size { cells, cap: max_cells });
    }
    let steps = step_count(t0, horizon, dt)?;
    let potential = ModifiedPotential::new(problem.clone());
    let var = problem.sigma() * problem.sigma() * dt;
    let kernels: Vec<Vec<f64>> = grid.nodes.iter().map(|a| kernel_matrix(a, var)).collect();
    let gain = kernel_gain(&grid, &kernels);
    if gain > 1e-3 {
        // Local mode builds one grid per query; report only the first.
        let level = if RESOLUTION_WARNED.swap(true, Ordering::Relaxed) {
            log::Level::Debug
        } else {
            log::Level::Warn
        };
        log!(
            level,
            "quadrature grid under-resolves the transition kernel (node spacing up to {:.2} kernel widths, \
             per-step mass error {:.1e}); values drift over {steps} steps",
            grid.max_spacing() / var.sqrt(),
            gain
        );
    }

    let d = grid.dim();
    let mut x = vec![0.0; d];
    let mut log_w = Vec::with_capacity(cells);
    let mut log_b = Vec::with_capacity(cells);
    for i in 0..cells {
        grid.point_into(i, &mut x);
        log_w.push(-potential.scaled(&x)? * dt);
        log_b.push(grid.weight(i).ln() + terminal_log_f(problem, &terminal, &x)?);
    }
    let top = log_b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::Numerical("terminal f vanishes on every grid node".into()));
    }
    if !top.is_finite() {
        return Err(Error::Range {
            what: "terminal message".into(),
            location: vec![],
        });
    }

    let gamma: Vec<f64> = log_w
        .iter()
        .enumerate()
        .map(|(i, lw)| grid.weight(i) * lw.exp())
        .collect();

    let mut messages = vec![Vec::new(); steps];
    let mut log_scale = vec![0.0; steps];
    messages[steps - 1] = log_b.iter().map(|l| (l - top).exp()).collect();
    log_scale[steps - 1] = top;
    let mut sol = QuadratureSolution {
        problem: problem.clone(),
        potential,
        terminal,
        grid,
        t0,
        dt,
        steps,
        kernels,
        log_w,
        messages: Vec::new(),
        log_scale: Vec::new(),
    };
    for n in (0..steps - 1).rev() {
        let mut b = messages[n + 1].clone();
        for k in 0..d {
            b = apply_axis(&b, &sol.kernels[k], m, d, k);
        }
        for (bi, g) in b.iter_mut().zip(&gamma) {
            *bi *= g;
        }
        let mx = b.iter().cloned().fold(0.0, f64::max);
        if !(mx > 0.0) || !mx.is_finite() {
            return Err(Error::Numerical(format!("backward message degenerate at step {n}")));
        }
        b.iter_mut().for_each(|v| *v /= mx);
        log_scale[n] = log_scale[n + 1] + mx.ln();
        messages[n] = b;
    }
    sol.messages = messages;
    sol.log_scale = log_scale;
    Ok(sol)
}

/// Largest `|Σⱼ Φ̃ᵢⱼ αⱼ − 1|` over nodes in the inner half of the grid: how
/// far one step moves a constant function.
pub fn kernel_gain(grid: &QuadGrid, kernels: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, kern) in kernels.iter().enumerate() {
        let nodes = &grid.nodes[k];
        let m = nodes.len();
        let (lo, hi) = (nodes[0], nodes[m - 1]);
        let (c, half) = (0.5 * (lo + hi), 0.25 * (hi - lo));
        for i in 0..m {
            if (nodes[i] - c).abs() > half {
                continue;
            }
            let a: f64 = (0..m).map(|j| kern[i * m + j] * grid.weights[k][j]).sum();
            worst = worst.max((a - 1.0).abs());
        }
    }
    worst
}

fn kernel_matrix(nodes: &[f64], var: f64) -> Vec<f64> {
    let m = nodes.len();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    let mut k = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let r = nodes[i] - nodes[j];
            k[i * m + j] = norm * (-r * r / (2.0 * var)).exp();
        }
    }
    k
}

/// Apply the `m × m` matrix `a` along axis `k` of a `[m; d]` tensor.
fn apply_axis(b: &[f64], a: &[f64], m: usize, d: usize, k: usize) -> Vec<f64> {
    let inner = m.pow((d - k - 1) as u32);
    let block = m * inner;
    let mut out = vec![0.0; b.len()];
    out.par_chunks_mut(block)
        .zip(b.par_chunks(block))
        .for_each(|(o, src)| {
            for i in 0..m {
                let row = &a[i * m..(i + 1) * m];
                for r in 0..inner {
                    let mut s = 0.0;
                    for (j, aij) in row.iter().enumerate() {
                        s += aij * src[j * inner + r];
                    }
                    o[i * inner + r] = s;
                }
            }
        });
    out
}

/// `Σᵢ bᵢ Πₖ gₖ[iₖ]` for a `[m; d]` tensor `b`.
fn contract(b: &[f64], g: &[Vec<f64>]) -> f64 {
    let mut cur = b.to_vec();
    for gk in g.iter().rev() {
        let m = gk.len();
        cur = cur
            .chunks(m)
            .map(|c| c.iter().zip(gk).map(|(a, b)| a * b).sum())
            .collect();
    }
    cur[0]
}

/// Result of a single evaluation of `f` and its log-gradient.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub log_f: f64,
    /// `σ²∇f/f`, the integrator-model control.
    pub integrator_control: Vec<f64>,
}

impl QuadratureSolution {
    pub fn problem(&self) -> &ControlProblem {
        &self.problem
    }
    pub fn grid(&self) -> &QuadGrid {
        &self.grid
    }
    pub fn terminal(&self) -> &Terminal {
        &self.terminal
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn horizon(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt
    }
    /// Grid times `t₀ … t_{N−1}` at which `f` can be evaluated.
    pub fn times(&self) -> Vec<f64> {
        (0..self.steps).map(|n| self.t0 + n as f64 * self.dt).collect()
    }
    /// Unit-max message used at time index `n` and its log scale.
    /// Per-step mass error of the transition on the inner half of the grid;
    /// see [`kernel_gain`].
    pub fn kernel_gain(&self) -> f64 {
        kernel_gain(&self.grid, &self.kernels)
    }
    pub fn message(&self, n: usize) -> (&[f64], f64) {
        (&self.messages[n], self.log_scale[n])
    }

    /// Index of the grid time `t`; `steps` denotes the horizon itself.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        let s = (t - self.t0) / self.dt;
        let n = s.round();
        let tol = 1e-9 * self.horizon().abs().max(1.0) / self.dt;
        if n < 0.0 || n > self.steps as f64 || (s - n).abs() > tol {
            return Err(Error::Usage(format!(
                "t = {t} is not a grid time in [{}, {}] with step {}",
                self.t0,
                self.horizon(),
                self.dt
            )));
        }
        Ok(n as usize)
    }

    fn check_inside(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.problem.dim() {
            return Err(Error::Usage("query point has the wrong dimension".into()));
        }
        for (&(lo, hi), &v) in self.grid.bounds().iter().zip(x) {
            let pad = 0.1 * (hi - lo);
            if !(v >= lo - pad && v <= hi + pad) {
                return Err(Error::Extrapolation { location: x.to_vec() });
            }
        }
        Ok(())
    }

    /// `ln f(tₙ, x̄)` and `σ²∇f/f` from the analytic gradient of `Φ₀`.
    pub fn evaluate_at(&self, n: usize, x: &[f64]) -> Result<Evaluation> {
        self.check_inside(x)?;
        let d = x.len();
        let s2 = self.problem.sigma() * self.problem.sigma();
        if n == self.steps {
            let log_f = terminal_log_f(&self.problem, &self.terminal, x)?;
            let mut u = vec![0.0; d];
            let mut y = x.to_vec();
            for k in 0..d {
                let h = 1e-5 * (1.0 + x[k].abs());
                y[k] = x[k] + h;
                let p = terminal_log_f(&self.problem, &self.terminal, &y)?;
                y[k] = x[k] - h;
                let q = terminal_log_f(&self.problem, &self.terminal, &y)?;
                y[k] = x[k];
                u[k] = s2 * (p - q) / (2.0 * h);
            }
            return Ok(Evaluation {
                log_f,
                integrator_control: u,
            });
        }
        let var = s2 * self.dt;
        let mut log_shift = 0.0;
        let mut g = Vec::with_capacity(d);
        for k in 0..d {
            let logs: Vec<f64> = self.grid.nodes[k]
                .iter()
                .map(|xi| -(xi - x[k]) * (xi - x[k]) / (2.0 * var))
                .collect();
            let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            log_shift += mx - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
            g.push(logs.iter().map(|l| (l - mx).exp()).collect::<Vec<f64>>());
        }
        let b = &self.messages[n];
        let s = contract(b, &g);
        let log_w = -self.potential.scaled(x)? * self.dt;
        let log_f = self.log_scale[n] + log_shift + log_w + s.ln();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::ControlUndefined {
                location: x.to_vec(),
                reason: "quadrature sum underflows".into(),
            });
        }
        let mut grad_v = vec![0.0; d];
        self.potential.gradient(x, &mut grad_v)?;
        let mut u = vec![0.0; d];
        for k in 0..d {
            let mut gk = g.clone();
            gk[k] = g[k].iter().zip(&self.grid.nodes[k]).map(|(a, xi)| a * xi).collect();
            let mean = contract(b, &gk) / s;
            u[k] = -self.dt * grad_v[k] / self.problem.r() + (mean - x[k]) / self.dt;
        }
        Ok(Evaluation {
            log_f,
            integrator_control: u,
        })
    }

    pub fn evaluate_log_f(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate_at(self.time_index(t)?, x)?.log_f)
    }

    /// `f(t, x̄)`; errors when it leaves the floating-point range.
    pub fn evaluate_f(&self, t: f64, x: &[f64]) -> Result<f64> {
        let f = self.evaluate_log_f(t, x)?.exp();
        if !f.is_finite() || f < POSITIVITY_FLOOR {
            return Err(Error::Range {
                what: "f".into(),
                location: x.to_vec(),
            });
        }
        Ok(f)
    }

    /// Integrator-model control `û = σ²∇f/f`.
    pub fn evaluate_integrator_control(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate_at(self.time_index(t)?, x)?.integrator_control)
    }

    /// Langevin-model optimal control `u* = σ²∇f/f + ∇ν`.
    pub fn evaluate_control(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.control_at(self.time_index(t)?, x)
    }

    pub fn control_at(&self, n: usize, x: &[f64]) -> Result<Vec<f64>> {
        let mut u = self.evaluate_at(n, x)?.integrator_control;
        let mut gn = vec![0.0; x.len()];
        self.problem.grad_nu(x, &mut gn)?;
        for (a, b) in u.iter_mut().zip(&gn) {
            *a += b;
        }
        Ok(u)
    }

    pub fn to_artifact(&self) -> QuadratureArtifact {
        QuadratureArtifact {
            problem: self.problem.name().to_string(),
            t0: self.t0,
            horizon: self.horizon(),
            dt: self.dt,
            steps: self.steps,
            grid: self.grid.clone(),
            log_w: self.log_w.clone(),
            messages: self.messages.clone(),
            log_scale: self.log_scale.clone(),
        }
    }

    /// Rebuild an evaluable solution from a stored artifact and its problem.
    pub fn from_artifact(problem: &ControlProblem, art: QuadratureArtifact, terminal: Terminal) -> Result<Self> {
        let cells = art.grid.len();
        if art.grid.dim() != problem.dim()
            || art.messages.len() != art.steps
            || art.log_scale.len() != art.steps
            || art.messages.iter().any(|m| m.len() != cells)
        {
            return Err(Error::Serde("quadrature artifact is inconsistent".into()));
        }
        let var = problem.sigma() * problem.sigma() * art.dt;
        let kernels = art.grid.nodes.iter().map(|a| kernel_matrix(a, var)).collect();
        Ok(Self {
            problem: problem.clone(),
            potential: ModifiedPotential::new(problem.clone()),
            terminal,
            grid: art.grid,
            t0: art.t0,
            dt: art.dt,
            steps: art.steps,
            kernels,
            log_w: art.log_w,
            messages: art.messages,
            log_scale: art.log_scale,
        })
    }
}

/// Width of the per-query grid: `4σ(T−t)/√δt`, floored at `4σ√δt`.
pub fn local_width(sigma: f64, remaining: f64, dt: f64) -> f64 {
    (4.0 * sigma * remaining / dt.sqrt()).max(4.0 * sigma * dt.sqrt())
}

/// Local-mode solution for one query: a grid of width [`local_width`]
/// centred at `x̄`, from `t` to `horizon`.
pub fn local_solution(
    problem: &ControlProblem,
    terminal: &Terminal,
    t: f64,
    x: &[f64],
    m: usize,
    horizon: f64,
    dt: f64,
) -> Result<QuadratureSolution> {
    let remaining = horizon - t;
    let half = 0.5 * local_width(problem.sigma(), remaining, dt);
    let bounds: Vec<(f64, f64)> = x.iter().map(|&c| (c - half, c + half)).collect();
    let grid = QuadGrid::spanning(&bounds, m)?;
    build_on_grid(problem, grid, t, horizon, dt, terminal.clone(), DEFAULT_MAX_CELLS)
}

/// Optimal control at `(t, x̄)` from a freshly built local grid. At the
/// horizon the control comes from the terminal condition directly.
pub fn local_control(
    problem: &ControlProblem,
    terminal: &Terminal,
    t: f64,
    x: &[f64],
    m: usize,
    horizon: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if horizon - t < 0.5 * dt {
        let s2 = problem.sigma() * problem.sigma();
        let mut u = vec![0.0; x.len()];
        problem.grad_nu(x, &mut u)?;
        let mut y = x.to_vec();
        for k in 0..x.len() {
            let h = 1e-5 * (1.0 + x[k].abs());
            y[k] = x[k] + h;
            let p = terminal_log_f(problem, terminal, &y)?;
            y[k] = x[k] - h;
            let q = terminal_log_f(problem, terminal, &y)?;
            y[k] = x[k];
            u[k] += s2 * (p - q) / (2.0 * h);
        }
        return Ok(u);
    }
    local_solution(problem, terminal, t, x, m, horizon, dt)?.control_at(0, x)
}

/// One row of a value-surface export.
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub f: f64,
    /// `−σ²R ln f`.
    pub v_hat: f64,
    /// `v̂ − Rν`.
    pub v: f64,
}

/// `f`, `v̂` and `v` at every grid time index in `time_indices` and every point.
pub fn value_surface(sol: &QuadratureSolution, time_indices: &[usize], points: &[Vec<f64>]) -> Result<Vec<SurfaceRow>> {
    let p = sol.problem();
    let scale = p.sigma() * p.sigma() * p.r();
    let mut rows = Vec::with_capacity(time_indices.len() * points.len());
    for &n in time_indices {
        let t = sol.t0 + n as f64 * sol.dt;
        let evals: Vec<Result<f64>> = points.par_iter().map(|x| Ok(sol.evaluate_at(n, x)?.log_f)).collect();
        for (x, lf) in points.iter().zip(evals) {
            let lf = lf?;
            let v_hat = -scale * lf;
            rows.push(SurfaceRow {
                t,
                x: x.clone(),
                f: lf.exp(),
                v_hat,
                v: v_hat - p.r() * p.nu(x)?,
            });
        }
    }
    Ok(rows)
}


#[cfg(test)]
mod riccati {
    use super::*;
    use crate::model::{Constant, SeparablePolynomial};

    /// `ν = 0`, `q = βx²`, `σ = R = 1`: `v = P(t)x²/2 + s(t)` with
    /// `P = √(2β) tanh(√(2β)(T−t))` and `s = ½ ln cosh(√(2β)(T−t))`.
    #[test]
    fn matches_closed_form_linear_quadratic_solution() {
        let beta: f64 = 1.0;
        let p = ControlProblem::new(
            Arc::new(Constant { dim: 1, value: 0.0 }),
            Arc::new(SeparablePolynomial::univariate(vec![0.0, 0.0, beta])),
            1.0,
            1.0,
        )
        .unwrap();
        let horizon = 1.0;
        let sol = build(&p, &[(-4.0, 4.0)], 250, horizon, 0.0025).unwrap();
        let k = (2.0 * beta).sqrt();
        for t in [0.0, 0.5] {
            let tau = horizon - t;
            let pt = k * (k * tau).tanh();
            let st = 0.5 * (k * tau).cosh().ln();
            for x in [-2.0, -1.6, -1.2, -0.8, -0.4, 0.4, 0.8, 1.2, 1.6, 2.0] {
                let f_exact = (-(pt * x * x / 2.0 + st)).exp();
                let f = sol.evaluate_f(t, &[x]).unwrap();
                assert!((f / f_exact - 1.0).abs() <= 1e-2, "f at t={t}, x={x}: {f} vs {f_exact}");
                let u = sol.evaluate_control(t, &[x]).unwrap()[0];
                assert!((u / (-pt * x) - 1.0).abs() <= 1e-2, "u at t={t}, x={x}: {u} vs {}", -pt * x);
            }
        }
    }
}

#[cfg(test)]
mod resolution {
    use super::*;
    use crate::model;

    #[test]
    fn kernel_gain_flags_coarse_grids() {
        let p = model::double_goal_2d().unwrap();
        let coarse = build(&p, &[(-2.0, 2.0), (-2.0, 2.0)], 20, 0.2, 0.1).unwrap();
        assert!(coarse.kernel_gain() > 0.1);
        let fine = build(&p, &[(-2.0, 2.0), (-2.0, 2.0)], 60, 0.2, 0.1).unwrap();
        assert!(fine.kernel_gain() < 1e-5);
    }
}
