//! One-dimensional Schrödinger eigensolver for
//! `H = V/(σ²R) − (σ²/2) d²/dx²` and everything derived from its spectrum:
//! the stationary density, value and control, the spectral gap, and the
//! exact modal evolution of density perturbations.
//!
//! The operator is discretized with second-order central differences on
//! `n` interior points of `[a, b]` with Dirichlet boundaries, which gives a
//! symmetric tridiagonal matrix with diagonal `V_i/(σ²R) + σ²/h²` and
//! off-diagonal `−σ²/(2h²)`.

pub mod tridiag;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, RectGrid};
use crate::model::ControlProblem;
use crate::transforms::{check_design_constraints, ModifiedPotential};

pub use tridiag::{LogVector, SymTridiagonal};

/// Default truncation box for one-dimensional problems.
pub const DEFAULT_DOMAIN: (f64, f64) = (-8.0, 8.0);
pub const DEFAULT_POINTS: usize = 2000;

#[derive(Clone, Debug)]
pub struct SpectralOptions {
    /// Number of eigenpairs to compute (at least 2 so the gap exists).
    pub modes: usize,
    /// Escalate truncation warnings and a failed confinement check to errors.
    pub strict: bool,
    /// Ground-state mass allowed in the outer 1% strips of the box.
    pub boundary_mass_tol: f64,
    /// Residual bound `‖He − λe‖/‖e‖` accepted per eigenpair.
    pub residual_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            modes: 8,
            strict: false,
            boundary_mass_tol: 1e-8,
            residual_tol: 1e-8,
        }
    }
}

/// Finite-difference Schrödinger operator on a truncated interval.
#[derive(Clone, Debug)]
pub struct SchrodingerDiscretization {
    domain: (f64, f64),
    h: f64,
    grid: RectGrid,
    potential: Vec<f64>,
    matrix: SymTridiagonal,
}

impl SchrodingerDiscretization {
    pub fn new(problem: &ControlProblem, domain: (f64, f64), n: usize) -> Result<Self> {
        if problem.dim() != 1 {
            return Err(Error::Usage("the spectral solver handles one-dimensional problems only".into()));
        }
        let (a, b) = domain;
        if !(b > a) || n < 3 {
            return Err(Error::Usage(format!("bad domain [{a}, {b}] or n = {n}")));
        }
        let h = (b - a) / (n + 1) as f64;
        let xs: Vec<f64> = (1..=n).map(|i| a + i as f64 * h).collect();
        let vp = ModifiedPotential::new(problem.clone());
        let potential = xs.iter().map(|&x| vp.scaled(&[x])).collect::<Result<Vec<_>>>()?;
        let s2 = problem.sigma() * problem.sigma();
        let diag = potential.iter().map(|v| v + s2 / (h * h)).collect();
        let off = vec![-s2 / (2.0 * h * h); n - 1];
        Ok(Self {
            domain,
            h,
            grid: RectGrid::new(vec![xs])?,
            potential,
            matrix: SymTridiagonal::new(diag, off)?,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn grid(&self) -> &RectGrid {
        &self.grid
    }
    /// `V(x_i)/(σ²R)` at the interior points.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }
    pub fn matrix(&self) -> &SymTridiagonal {
        &self.matrix
    }
}

/// Eigenpairs of the discretized operator plus derived stationary objects.
#[derive(Clone, Debug)]
pub struct SpectralSolution {
    problem: ControlProblem,
    disc: SchrodingerDiscretization,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<GridFunction>,
    log_ground: Vec<f64>,
    boundary_mass: f64,
}

pub fn solve_eigen(
    problem: &ControlProblem,
    domain: (f64, f64),
    n: usize,
    opts: &SpectralOptions,
) -> Result<SpectralSolution> {
    if n < 100 {
        return Err(Error::Usage(format!("need at least 100 grid points, got {n}")));
    }
    if opts.modes < 2 || opts.modes >= n {
        return Err(Error::Usage(format!("modes must lie in [2, n), got {}", opts.modes)));
    }
    let disc = SchrodingerDiscretization::new(problem, domain, n)?;
    if opts.strict {
        let design = check_design_constraints(&ModifiedPotential::new(problem.clone()), &[domain], n.min(4001))?;
        if !design.a1_pass {
            return Err(Error::Truncation(
                "modified potential is not confining on the box; the spectrum may not be discrete".into(),
            ));
        }
    }
    let t = disc.matrix();
    let h = disc.h();

    let eigenvalues = (0..opts.modes)
        .into_par_iter()
        .map(|k| t.eigenvalue(k))
        .collect::<Result<Vec<_>>>()?;
    if let Some(w) = eigenvalues.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Numerical(format!(
            "eigenvalues not strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }

    let vectors: Vec<LogVector> = eigenvalues.par_iter().map(|&l| t.eigenvector(l)).collect();

    let ground = &vectors[0];
    let s0 = ground.sign[0];
    if ground.sign.iter().any(|&s| s != s0) || ground.log_abs.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical("ground state is not of one sign".into()));
    }
    let ground_norm = ground.log_norm(h);
    let log_ground: Vec<f64> = ground.log_abs.iter().map(|l| l - ground_norm).collect();

    let mut values: Vec<Vec<f64>> = Vec::with_capacity(opts.modes);
    values.push(log_ground.iter().map(|l| l.exp()).collect());
    for v in &vectors[1..] {
        let (mut z, _) = v.normalized_values(h);
        // One Gram-Schmidt sweep against the lower modes.
        for prev in &values {
            let c: f64 = z.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>() * h;
            for (zi, pi) in z.iter_mut().zip(prev) {
                *zi -= c * pi;
            }
        }
        let norm = (z.iter().map(|a| a * a).sum::<f64>() * h).sqrt();
        z.iter_mut().for_each(|a| *a /= norm);
        fix_sign(&mut z);
        values.push(z);
    }

    for (k, (z, &lam)) in values.iter().zip(&eigenvalues).enumerate() {
        let res = t.residual(lam, z);
        let scale = lam.abs().max(1.0);
        if !(res <= opts.residual_tol * scale) {
            return Err(Error::Numerical(format!(
                "eigenpair {k} residual {res:e} exceeds {:e}",
                opts.residual_tol * scale
            )));
        }
    }

    let boundary_mass = boundary_mass(disc.grid().axis(0), &values[0], h, domain);
    if boundary_mass > opts.boundary_mass_tol {
        if opts.strict {
            return Err(Error::Truncation(format!(
                "ground-state mass {boundary_mass:e} within 1% of the box edges; widen the domain"
            )));
        }
        warn!("ground-state mass {boundary_mass:e} within 1% of the box edges [{}, {}]", domain.0, domain.1);
    }

    let eigenfunctions = values
        .into_iter()
        .map(|z| GridFunction::new(disc.grid().clone(), z))
        .collect::<Result<Vec<_>>>()?;

    Ok(SpectralSolution {
        problem: problem.clone(),
        disc,
        eigenvalues,
        eigenfunctions,
        log_ground,
        boundary_mass,
    })
}

/// Solve on the default box, doubling width and point count until the
/// ground state's boundary mass drops below `opts.boundary_mass_tol`.
pub fn solve_eigen_auto(problem: &ControlProblem, opts: &SpectralOptions) -> Result<SpectralSolution> {
    let (mut a, mut b) = DEFAULT_DOMAIN;
    let mut n = DEFAULT_POINTS;
    let relaxed = SpectralOptions {
        strict: false,
        ..opts.clone()
    };
    for _ in 0..4 {
        let sol = solve_eigen(problem, (a, b), n, &relaxed)?;
        if sol.boundary_mass <= opts.boundary_mass_tol {
            return if opts.strict { solve_eigen(problem, (a, b), n, opts) } else { Ok(sol) };
        }
        let c = 0.5 * (a + b);
        let w = b - a;
        a = c - w;
        b = c + w;
        n *= 2;
    }
    solve_eigen(problem, (a, b), n, opts)
}

/// Positive at the first extremum exceeding 1e−3 of the maximum magnitude.
fn fix_sign(z: &mut [f64]) {
    let amax = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let n = z.len();
    let first = (1..n - 1)
        .find(|&i| {
            z[i].abs() >= 1e-3 * amax && z[i].abs() >= z[i - 1].abs() && z[i].abs() >= z[i + 1].abs()
        })
        .unwrap_or(0);
    if z[first] < 0.0 {
        z.iter_mut().for_each(|v| *v = -*v);
    }
}

fn boundary_mass(xs: &[f64], e0: &[f64], h: f64, (a, b): (f64, f64)) -> f64 {
    let strip = 0.01 * (b - a);
    xs.iter()
        .zip(e0)
        .filter(|(&x, _)| x - a <= strip || b - x <= strip)
        .map(|(_, e)| e * e * h)
        .sum()
}

/// Modal evolution of a density perturbation.
#[derive(Clone, Debug)]
pub struct PerturbationEvolution {
    pub times: Vec<f64>,
    pub densities: Vec<GridFunction>,
    /// `gₙ(0)` for n = 1..m (index 0 is the forced-zero ground coefficient).
    pub coefficients: Vec<f64>,
    /// Decay rates `λₙ − λ₀`.
    pub rates: Vec<f64>,
    /// Fraction of `‖g̃(0)‖²` captured by the computed modes.
    pub captured_energy: f64,
}

impl PerturbationEvolution {
    /// `‖g̃(t)‖₂` from the modal coefficients.
    pub fn hermitized_norm(&self, t: f64) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.rates)
            .skip(1)
            .map(|(c, r)| (c * (-r * t).exp()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary {
    pub lambda0: f64,
    pub gap: f64,
    pub optimal_cost: f64,
    pub boundary_mass: f64,
    pub domain: (f64, f64),
    pub points: usize,
}

/// Overlap with `e₀` tolerated for a mass-preserving perturbation.
pub const PERTURBATION_CLASS_TOL: f64 = 1e-6;
/// Fraction of perturbation energy the retained modes must capture.
pub const CAPTURED_ENERGY_MIN: f64 = 0.999;

impl SpectralSolution {
    pub fn problem(&self) -> &ControlProblem {
        &self.problem
    }
    pub fn discretization(&self) -> &SchrodingerDiscretization {
        &self.disc
    }
    pub fn grid(&self) -> &RectGrid {
        self.disc.grid()
    }
    pub fn h(&self) -> f64 {
        self.disc.h()
    }
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    pub fn eigenfunctions(&self) -> &[GridFunction] {
        &self.eigenfunctions
    }
    pub fn lambda0(&self) -> f64 {
        self.eigenvalues[0]
    }
    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }
    /// Optimal average cost `c = σ²R λ₀`.
    pub fn optimal_cost(&self) -> f64 {
        let p = &self.problem;
        p.sigma() * p.sigma() * p.r() * self.lambda0()
    }
    pub fn boundary_mass(&self) -> f64 {
        self.boundary_mass
    }
    /// `ln e₀` at the grid points, with `Σ e₀² h = 1`.
    pub fn log_ground(&self) -> &[f64] {
        &self.log_ground
    }

    pub fn summary(&self) -> SpectrumSummary {
        SpectrumSummary {
            lambda0: self.lambda0(),
            gap: self.gap(),
            optimal_cost: self.optimal_cost(),
            boundary_mass: self.boundary_mass,
            domain: self.disc.domain(),
            points: self.grid().len(),
        }
    }

    /// Smallest interval `[lo, hi]` of grid points leaving at most
    /// `tail_mass / 2` of `p∞` on each side.
    pub fn bulk_interval(&self, tail_mass: f64) -> (f64, f64) {
        let p = self.stationary_density();
        let h = self.h();
        let xs = self.grid().axis(0);
        let vals = p.values();
        let mut acc = 0.0;
        let mut lo = 0;
        while lo + 1 < vals.len() && acc + vals[lo] * h <= 0.5 * tail_mass {
            acc += vals[lo] * h;
            lo += 1;
        }
        acc = 0.0;
        let mut hi = vals.len() - 1;
        while hi > lo && acc + vals[hi] * h <= 0.5 * tail_mass {
            acc += vals[hi] * h;
            hi -= 1;
        }
        (xs[lo], xs[hi])
    }

    /// `‖He_k − λ_k e_k‖₂/‖e_k‖₂`.
    pub fn residual(&self, k: usize) -> f64 {
        self.disc
            .matrix()
            .residual(self.eigenvalues[k], self.eigenfunctions[k].values())
    }

    /// Stationary transformed value `f∞ = e₀` (so `Z = ∫ f∞² = 1`).
    pub fn stationary_f(&self) -> &GridFunction {
        &self.eigenfunctions[0]
    }

    /// Diagnostic `Z = ∫ exp(−2w/σ²) = ∫ f∞²` on the grid.
    pub fn normalization_constant(&self) -> f64 {
        self.log_ground.iter().map(|l| (2.0 * l).exp()).sum::<f64>() * self.h()
    }

    /// `p∞ = e₀² / Σ e₀² h`.
    pub fn stationary_density(&self) -> GridFunction {
        let z = self.normalization_constant();
        let values = self.log_ground.iter().map(|l| (2.0 * l).exp() / z).collect();
        GridFunction::new(self.grid().clone(), values).expect("ground state values are finite")
    }

    /// `v∞ = −σ²R ln f∞ − Rν` and `u∞ = −∇v∞/R` on the grid.
    pub fn stationary_value_and_control(&self) -> Result<(GridFunction, GridFunction)> {
        let p = &self.problem;
        let scale = p.sigma() * p.sigma() * p.r();
        let xs = self.grid().axis(0);
        let v = xs
            .iter()
            .zip(&self.log_ground)
            .map(|(&x, &l)| Ok(-scale * l - p.r() * p.nu(&[x])?))
            .collect::<Result<Vec<_>>>()?;
        let v = GridFunction::new(self.grid().clone(), v)?;
        let u = v.derivative(0)?.map(|d| -d / p.r())?;
        Ok((v, u))
    }

    /// Exact evolution of `p0` under the stationary control, through the
    /// modal expansion of the hermitized perturbation
    /// `g̃(t) = Σ_{n≥1} gₙ(0) e^{−(λₙ−λ₀)t} eₙ`, `p(t) = f∞ (g∞ + g̃(t))`.
    pub fn evolve_perturbation(&self, p0: &GridFunction, times: &[f64]) -> Result<PerturbationEvolution> {
        if p0.grid() != self.grid() {
            return Err(Error::Usage("initial density must live on the solution grid".into()));
        }
        let h = self.h();
        if let Some(i) = p0.values().iter().position(|&v| v < 0.0) {
            return Err(Error::Domain {
                what: "initial density must be nonnegative".into(),
                location: self.grid().point(i),
                value: p0.values()[i],
            });
        }
        let mass: f64 = p0.values().iter().sum::<f64>() * h;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Usage(format!("initial density has mass {mass}, expected 1")));
        }
        let e0 = self.eigenfunctions[0].values();
        let g0 = p0
            .values()
            .iter()
            .zip(&self.log_ground)
            .zip(e0)
            .enumerate()
            .map(|(i, ((&p, &l), &e))| {
                if p == 0.0 {
                    return Ok(-e);
                }
                let q = p * (-l).exp();
                if !q.is_finite() {
                    return Err(Error::Range {
                        what: "hermitized initial density".into(),
                        location: self.grid().point(i),
                    });
                }
                Ok(q - e)
            })
            .collect::<Result<Vec<_>>>()?;

        let coefficients: Vec<f64> = self
            .eigenfunctions
            .iter()
            .map(|ef| ef.values().iter().zip(&g0).map(|(a, b)| a * b).sum::<f64>() * h)
            .collect();
        let overlap = coefficients[0];
        if overlap.abs() > PERTURBATION_CLASS_TOL {
            return Err(Error::PerturbationClass {
                overlap,
                tolerance: PERTURBATION_CLASS_TOL,
            });
        }
        let total = g0.iter().map(|g| g * g).sum::<f64>() * h - overlap * overlap;
        let captured: f64 = coefficients[1..].iter().map(|c| c * c).sum();
        let captured_energy = if total <= 1e-24 { 1.0 } else { (captured / total).min(1.0) };
        if captured_energy < CAPTURED_ENERGY_MIN {
            return Err(Error::Truncation(format!(
                "{} modes capture only {:.6} of the perturbation energy (need {CAPTURED_ENERGY_MIN})",
                self.eigenvalues.len(),
                captured_energy
            )));
        }

        let mut coefficients = coefficients;
        coefficients[0] = 0.0;
        let rates: Vec<f64> = self.eigenvalues.iter().map(|l| l - self.lambda0()).collect();
        let densities = times
            .iter()
            .map(|&t| {
                let mut g: Vec<f64> = e0.to_vec();
                for (n, ef) in self.eigenfunctions.iter().enumerate().skip(1) {
                    let c = coefficients[n] * (-rates[n] * t).exp();
                    for (gi, ei) in g.iter_mut().zip(ef.values()) {
                        *gi += c * ei;
                    }
                }
                let p = g.iter().zip(e0).map(|(a, b)| a * b).collect();
                GridFunction::new(self.grid().clone(), p)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(PerturbationEvolution {
            times: times.to_vec(),
            densities,
            coefficients,
            rates,
            captured_energy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, Constant, SeparablePolynomial};
    use std::sync::Arc;

    fn harmonic() -> ControlProblem {
        ControlProblem::new(
            Arc::new(Constant { dim: 1, value: 0.0 }),
            Arc::new(SeparablePolynomial::univariate(vec![0.0, 0.0, 0.5])),
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn opts(modes: usize) -> SpectralOptions {
        SpectralOptions {
            modes,
            ..Default::default()
        }
    }

    #[test]
    fn harmonic_oscillator_levels() {
        let sol = solve_eigen(&harmonic(), (-10.0, 10.0), 2000, &opts(4)).unwrap();
        for (k, &l) in sol.eigenvalues().iter().enumerate() {
            assert!((l - (k as f64 + 0.5)).abs() < 1e-4, "λ{k} = {l}");
        }
        assert!((sol.gap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn eigenfunctions_are_orthonormal_with_small_residual() {
        let sol = solve_eigen(&harmonic(), (-10.0, 10.0), 2000, &opts(6)).unwrap();
        let h = sol.h();
        let efs = sol.eigenfunctions();
        for k in 0..efs.len() {
            assert!(sol.residual(k) <= 1e-8);
            for l in 0..efs.len() {
                let ip: f64 = efs[k].values().iter().zip(efs[l].values()).map(|(a, b)| a * b).sum::<f64>() * h;
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10, "<e{k},e{l}> = {ip}");
            }
        }
        assert!(efs[0].values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn richardson_slope_is_two() {
        let l0 = |n| solve_eigen(&harmonic(), (-10.0, 10.0), n, &opts(2)).unwrap().lambda0();
        let (a, b, c) = (l0(250), l0(501), l0(1003));
        let slope = ((a - b) / (b - c)).log2();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn harmonic_density_has_variance_one_half() {
        let sol = solve_eigen(&harmonic(), (-10.0, 10.0), 2000, &opts(2)).unwrap();
        let p = sol.stationary_density();
        let h = sol.h();
        let xs = p.grid().axis(0);
        let mass: f64 = p.values().iter().sum::<f64>() * h;
        let var: f64 = xs.iter().zip(p.values()).map(|(x, v)| x * x * v).sum::<f64>() * h;
        assert!((mass - 1.0).abs() < 1e-8);
        assert!((var.sqrt() - 0.5f64.sqrt()).abs() < 1e-3);
        // even potential ⇒ even density
        let n = xs.len();
        let asym = (0..n).map(|i| (p.values()[i] - p.values()[n - 1 - i]).abs()).fold(0.0, f64::max);
        assert!(asym <= 1e-8, "asymmetry {asym}");
    }

    #[test]
    fn gibbs_problem_density_and_control() {
        let p = model::uncontrolled_gibbs_1d().unwrap();
        let sol = solve_eigen_auto(&p, &opts(3)).unwrap();
        assert!((sol.lambda0() - model::GIBBS_CONSTANT_COST).abs() < 1e-4);
        let dens = sol.stationary_density();
        let xs = dens.grid().axis(0);
        let z: f64 = xs.iter().map(|x| (-x * x).exp()).sum::<f64>() * sol.h();
        let linf = xs
            .iter()
            .zip(dens.values())
            .map(|(x, v)| ((-x * x).exp() / z - v).abs())
            .fold(0.0, f64::max);
        assert!(linf < 1e-3, "L∞ {linf}");
        // Dirichlet edges distort ln e₀ in the far tail; measure where p∞ lives.
        let (lo, hi) = sol.bulk_interval(1e-6);
        assert!(lo < -3.0 && hi > 3.0);
        let (_, u) = sol.stationary_value_and_control().unwrap();
        let umax = xs
            .iter()
            .zip(u.values())
            .filter(|(&x, _)| x >= lo && x <= hi)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);
        assert!(umax < 1e-4, "sup |u| = {umax}");
    }

    #[test]
    fn cubic_ground_state_positive_and_gapped() {
        let p = model::cubic_1d().unwrap();
        let sol = solve_eigen(&p, (-5.0, 5.0), 2000, &opts(4)).unwrap();
        assert!(sol.stationary_f().values().iter().all(|&v| v > 0.0));
        assert!(sol.gap() > 0.0);
        // closed-loop drift −∇ν + u∞ points inward at ±2
        let (_, u) = sol.stationary_value_and_control().unwrap();
        for x in [-2.0, 2.0] {
            let drift = p.drift(&[x]).unwrap()[0] + u.interpolate(&[x]).0;
            assert!(drift * x < 0.0, "drift {drift} at {x}");
        }
        // default box: tails underflow but the log representation stays finite
        let wide = solve_eigen_auto(&p, &opts(2)).unwrap();
        assert!(wide.log_ground().iter().all(|l| l.is_finite()));
    }

    #[test]
    fn ground_energy_identity_with_nonnegative_potential() {
        // ⟨He₀, e₀⟩ = Σ V/(σ²R) e₀² h + (σ²/2) Σ (Δe₀)²/h = λ₀ > 0
        let p = model::lqg_1d(1.0).unwrap();
        let shift = 0.5; // V = 1.5x² − 0.5, shifted to be nonnegative
        let q = SeparablePolynomial::univariate(vec![shift, 0.0, 1.0]);
        let p = ControlProblem::new(p.nu_field().clone(), Arc::new(q), 1.0, 1.0).unwrap();
        let sol = solve_eigen(&p, (-8.0, 8.0), 2000, &opts(2)).unwrap();
        let e = sol.stationary_f().values();
        let h = sol.h();
        let pot: f64 = sol.discretization().potential().iter().zip(e).map(|(v, x)| v * x * x).sum::<f64>() * h;
        let mut kin = e[0] * e[0] + e[e.len() - 1] * e[e.len() - 1];
        kin += e.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
        let energy = pot + 0.5 * kin / h;
        assert!((energy - sol.lambda0()).abs() < 1e-6);
        assert!(sol.lambda0() > 0.0);
    }

    #[test]
    fn lqg_stationary_value_and_control() {
        let p = model::lqg_1d(1.0).unwrap();
        let sol = solve_eigen_auto(&p, &opts(2)).unwrap();
        let a = 3f64.sqrt() - 1.0;
        let (v, u) = sol.stationary_value_and_control().unwrap();
        let v0 = v.interpolate(&[0.0]).0;
        for x in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
            let vx = v.interpolate(&[x]).0 - v0;
            assert!((vx - a * x * x / 2.0).abs() <= 1e-3 * a * x * x / 2.0, "v at {x}");
            let ux = u.interpolate(&[x]).0;
            assert!((ux + a * x).abs() <= 1e-3 * (a * x).abs(), "u at {x}: {ux}");
        }
        // optimal cost c = σ²a/2 for the quadratic ansatz
        assert!((sol.optimal_cost() - a / 2.0).abs() < 1e-4);
    }

    #[test]
    fn stationary_initial_density_does_not_move() {
        let p = model::cubic_1d().unwrap();
        let sol = solve_eigen(&p, (-4.0, 4.0), 1000, &opts(6)).unwrap();
        let pinf = sol.stationary_density();
        let evo = sol.evolve_perturbation(&pinf, &[0.0, 0.5, 3.0]).unwrap();
        for d in &evo.densities {
            let err = d.values().iter().zip(pinf.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn single_mode_decays_at_the_gap() {
        let p = model::cubic_1d().unwrap();
        let sol = solve_eigen(&p, (-4.0, 4.0), 1000, &opts(6)).unwrap();
        let e0 = sol.eigenfunctions()[0].values();
        let e1 = sol.eigenfunctions()[1].values();
        let eps = 0.05;
        // p0 = f∞(g∞ + εe₁) is not sign-definite far out; clip is not needed
        // because e₀e₁ decays with e₀², but negative values are rejected.
        let p0: Vec<f64> = e0.iter().zip(e1).map(|(a, b)| a * (a + eps * b)).collect();
        if p0.iter().any(|&v| v < 0.0) {
            return;
        }
        let p0 = GridFunction::new(sol.grid().clone(), p0).unwrap();
        let times = [0.0, 0.25, 0.5, 1.0];
        let evo = sol.evolve_perturbation(&p0, &times).unwrap();
        for (&t, d) in times.iter().zip(&evo.densities) {
            let expect = eps * (-sol.gap() * t).exp();
            assert!((evo.hermitized_norm(t) - expect).abs() < 1e-9);
            let mass: f64 = d.values().iter().sum::<f64>() * sol.h();
            assert!((mass - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_mass_changing_perturbations() {
        let p = model::cubic_1d().unwrap();
        let sol = solve_eigen(&p, (-4.0, 4.0), 1000, &opts(4)).unwrap();
        let pinf = sol.stationary_density();
        let bad = pinf.map(|v| v * 1.5).unwrap();
        assert!(matches!(sol.evolve_perturbation(&bad, &[0.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn strict_mode_refuses_truncated_or_unconfined() {
        let strict = SpectralOptions {
            strict: true,
            ..opts(2)
        };
        let cap = ControlProblem::new(
            Arc::new(Constant { dim: 1, value: 0.0 }),
            Arc::new(SeparablePolynomial::univariate(vec![0.0, 0.0, -1.0])),
            1.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(solve_eigen(&cap, (-5.0, 5.0), 400, &strict), Err(Error::Truncation(_))));
        // a box far too small for the harmonic ground state
        assert!(matches!(
            solve_eigen(&harmonic(), (-1.0, 1.0), 400, &strict),
            Err(Error::Truncation(_))
        ));
        assert!(solve_eigen(&harmonic(), (-1.0, 1.0), 400, &opts(2)).is_ok());
    }
}
