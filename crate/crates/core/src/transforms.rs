//! Variable transforms between the value/density pair `(v, p)` and the
//! linear pair `(f, g)`, the modified potential that drives both linear
//! equations, and extraction of the feedback control from `f`.
//!
//! * `f = exp(−(v + Rν)/(σ²R))`, inverse `v = −σ²R ln f − Rν`
//! * `g = p / f`, inverse `p = f g`
//! * `V = q + (R/2)|∇ν|² − (σ²R/2)Δν`
//! * `u* = σ²∇f/f + ∇ν`; the closed-loop drift is `σ²∇f/f`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, RectGrid};
use crate::model::ControlProblem;

/// Positivity floor below which quotients by `f` are refused.
pub const POSITIVITY_FLOOR: f64 = 1e-300;

/// `V(x) = q + (R/2)|∇ν|² − (σ²R/2)Δν + shift`.
#[derive(Clone, Debug)]
pub struct ModifiedPotential {
    problem: ControlProblem,
    shift: f64,
}

pub fn modified_potential(problem: &ControlProblem) -> ModifiedPotential {
    ModifiedPotential::new(problem.clone())
}

impl ModifiedPotential {
    pub fn new(problem: ControlProblem) -> Self {
        Self { problem, shift: 0.0 }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn problem(&self) -> &ControlProblem {
        &self.problem
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let p = &self.problem;
        let mut g = vec![0.0; p.dim()];
        p.grad_nu(x, &mut g)?;
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let (s2, r) = (p.sigma() * p.sigma(), p.r());
        Ok(p.q(x)? + 0.5 * r * g2 - 0.5 * s2 * r * p.laplacian_nu(x)? + self.shift)
    }

    /// Schrödinger potential `V/(σ²R)`.
    pub fn scaled(&self, x: &[f64]) -> Result<f64> {
        let p = &self.problem;
        Ok(self.value(x)? / (p.sigma() * p.sigma() * p.r()))
    }

    /// ∇V by fourth-order central differences of the analytic `V`.
    ///
    /// Exact gradients would need third derivatives of ν; with h ≈ 1e−3 the
    /// truncation error is O(1e−12) relative for the builtin fields.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let mut y = x.to_vec();
        for k in 0..x.len() {
            let h = 1e-3 * (1.0 + x[k].abs());
            let mut at = |dx: f64| -> Result<f64> {
                y[k] = x[k] + dx;
                self.value(&y)
            };
            let (p2, p1, m1, m2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
            y[k] = x[k];
            out[k] = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        }
        Ok(())
    }

    pub fn on_grid(&self, grid: &RectGrid) -> Result<GridFunction> {
        GridFunction::from_fn(grid.clone(), |x| self.value(x))
    }
}

/// `f = exp(−(v + Rν)/(σ²R))` pointwise.
pub fn value_to_f(v: &GridFunction, problem: &ControlProblem) -> Result<GridFunction> {
    let grid = v.grid();
    let scale = problem.sigma() * problem.sigma() * problem.r();
    let mut x = vec![0.0; grid.dim()];
    let mut out = Vec::with_capacity(grid.len());
    for (i, &vi) in v.values().iter().enumerate() {
        grid.point_into(i, &mut x);
        let expo = -(vi + problem.r() * problem.nu(&x)?) / scale;
        let f = expo.exp();
        if !f.is_finite() {
            return Err(Error::Range {
                what: "f = exp(-(v + R nu)/(sigma^2 R)) overflows".into(),
                location: x.clone(),
            });
        }
        if f < POSITIVITY_FLOOR {
            return Err(Error::Range {
                what: "f = exp(-(v + R nu)/(sigma^2 R)) underflows".into(),
                location: x.clone(),
            });
        }
        out.push(f);
    }
    GridFunction::new(grid.clone(), out)
}

/// `v = −σ²R ln f − Rν` pointwise.
pub fn f_to_value(f: &GridFunction, problem: &ControlProblem) -> Result<GridFunction> {
    let grid = f.grid();
    let scale = problem.sigma() * problem.sigma() * problem.r();
    let mut x = vec![0.0; grid.dim()];
    let mut out = Vec::with_capacity(grid.len());
    for (i, &fi) in f.values().iter().enumerate() {
        grid.point_into(i, &mut x);
        if !(fi > 0.0) {
            return Err(Error::Domain {
                what: "f must be positive to invert the transform".into(),
                location: x.clone(),
                value: fi,
            });
        }
        out.push(-scale * fi.ln() - problem.r() * problem.nu(&x)?);
    }
    GridFunction::new(grid.clone(), out)
}

/// `g = p / f`.
pub fn hermitize(p: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    p.same_grid(f)?;
    let grid = p.grid();
    let values = p
        .values()
        .iter()
        .zip(f.values())
        .enumerate()
        .map(|(i, (&pi, &fi))| {
            if pi < 0.0 {
                return Err(Error::Domain {
                    what: "density must be nonnegative".into(),
                    location: grid.point(i),
                    value: pi,
                });
            }
            if !(fi > POSITIVITY_FLOOR) {
                return Err(Error::Underflow {
                    location: grid.point(i),
                    value: fi,
                });
            }
            Ok(pi / fi)
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(grid.clone(), values)
}

/// `p = f g`.
pub fn dehermitize(g: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    g.same_grid(f)?;
    let values = g.values().iter().zip(f.values()).map(|(a, b)| a * b).collect();
    GridFunction::new(g.grid().clone(), values)
}

/// Feedback control recovered from a gridded `f` and its FD gradient.
#[derive(Clone, Debug)]
pub struct GridControl {
    problem: ControlProblem,
    f: GridFunction,
    grad: Vec<GridFunction>,
}

impl GridControl {
    pub fn new(f: GridFunction, problem: &ControlProblem) -> Result<Self> {
        if f.grid().dim() != problem.dim() {
            return Err(Error::Usage("f and problem dimensions disagree".into()));
        }
        let grad = f.gradient()?;
        Ok(Self {
            problem: problem.clone(),
            f,
            grad,
        })
    }

    pub fn f(&self) -> &GridFunction {
        &self.f
    }

    /// Integrator-dynamics control `σ²∇f/f`, which is also the closed-loop
    /// drift of the Langevin agent. Returns whether `x` was clamped.
    pub fn integrator_control_into(&self, x: &[f64], out: &mut [f64]) -> Result<bool> {
        let (fx, clamped) = self.f.interpolate(x);
        if !(fx > POSITIVITY_FLOOR) {
            return Err(Error::ControlUndefined {
                location: x.to_vec(),
                reason: format!("f = {fx:e} below floor"),
            });
        }
        let s2 = self.problem.sigma() * self.problem.sigma();
        for (k, g) in self.grad.iter().enumerate() {
            out[k] = s2 * g.interpolate(x).0 / fx;
        }
        Ok(clamped)
    }

    /// Optimal control `u* = σ²∇f/f + ∇ν` of the Langevin problem.
    pub fn control_into(&self, x: &[f64], out: &mut [f64]) -> Result<bool> {
        let clamped = self.integrator_control_into(x, out)?;
        let mut gn = vec![0.0; x.len()];
        self.problem.grad_nu(x, &mut gn)?;
        for (o, g) in out.iter_mut().zip(&gn) {
            *o += g;
        }
        Ok(clamped)
    }

    pub fn control(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.control_into(x, &mut out)?;
        Ok(out)
    }
}

/// One-shot `u*(x) = σ²∇f(x)/f(x) + ∇ν(x)`.
pub fn control_from_f(f: &GridFunction, problem: &ControlProblem, x: &[f64]) -> Result<Vec<f64>> {
    GridControl::new(f.clone(), problem)?.control(x)
}

/// Outcome of the stability design checks on a box.
#[derive(Clone, Debug, Serialize)]
pub struct DesignReport {
    /// Heuristic confinement verdict: V strictly increasing along every
    /// outward axis and corner ray over the outer 20% of the box.
    pub a1_pass: bool,
    pub a1_failed_directions: Vec<Vec<f64>>,
    pub a2_pass: bool,
    pub min_v: f64,
    pub argmin_v: Vec<f64>,
    /// Smallest constant to add to q so that V ≥ 0 on the grid.
    pub required_shift: f64,
    /// Minimum of q on the grid; q is expected to be bounded below.
    pub min_q: f64,
}

/// Evaluate the confinement and nonnegativity constraints on `V` over a
/// uniform grid of `n` points per axis spanning `domain`.
pub fn check_design_constraints(
    potential: &ModifiedPotential,
    domain: &[(f64, f64)],
    n: usize,
) -> Result<DesignReport> {
    let d = domain.len();
    if d == 0 || d != potential.problem().dim() {
        return Err(Error::Usage("domain dimension does not match the problem".into()));
    }
    if domain.iter().any(|&(lo, hi)| !(hi > lo)) || n < 5 {
        return Err(Error::Usage("domain must be a nonempty box and n >= 5".into()));
    }
    let grid = RectGrid::uniform(domain, &vec![n; d])?;
    let mut x = vec![0.0; d];
    let (mut min_v, mut argmin_v, mut min_q) = (f64::INFINITY, vec![0.0; d], f64::INFINITY);
    for i in 0..grid.len() {
        grid.point_into(i, &mut x);
        let v = potential.value(&x)?;
        if v < min_v {
            min_v = v;
            argmin_v.copy_from_slice(&x);
        }
        min_q = min_q.min(potential.problem().q(&x)?);
    }

    let center: Vec<f64> = domain.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
    let half: Vec<f64> = domain.iter().map(|&(lo, hi)| 0.5 * (hi - lo)).collect();
    let samples = (n / 5).max(10);
    let mut failed = Vec::new();
    for dir in ray_directions(d) {
        let mut prev = f64::NEG_INFINITY;
        let mut ok = true;
        for j in 0..=samples {
            let s = 0.8 + 0.2 * j as f64 / samples as f64;
            for k in 0..d {
                x[k] = center[k] + s * dir[k] * half[k];
            }
            let v = potential.value(&x)?;
            if v <= prev {
                ok = false;
                break;
            }
            prev = v;
        }
        if !ok {
            failed.push(dir);
        }
    }

    Ok(DesignReport {
        a1_pass: failed.is_empty(),
        a1_failed_directions: failed,
        a2_pass: min_v >= 0.0,
        min_v,
        argmin_v,
        required_shift: (-min_v).max(0.0),
        min_q,
    })
}

/// ±e_k for every axis, plus every corner direction (±1, …, ±1) when d > 1.
fn ray_directions(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for k in 0..d {
        for s in [-1.0, 1.0] {
            let mut e = vec![0.0; d];
            e[k] = s;
            dirs.push(e);
        }
    }
    if d > 1 {
        for mask in 0..(1usize << d) {
            dirs.push((0..d).map(|k| if (mask >> k) & 1 == 1 { 1.0 } else { -1.0 }).collect());
        }
    }
    dirs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, Constant, SeparablePolynomial};
    use std::sync::Arc;

    fn poly_problem(nu: Vec<f64>, q: Vec<f64>, sigma: f64, r: f64) -> ControlProblem {
        ControlProblem::new(
            Arc::new(SeparablePolynomial::univariate(nu)),
            Arc::new(SeparablePolynomial::univariate(q)),
            sigma,
            r,
        )
        .unwrap()
    }

    #[test]
    fn cubic_modified_potential_closed_form() {
        let vp = modified_potential(&model::cubic_1d().unwrap());
        for x in [-2.0f64, -0.3, 0.0, 0.7, 1.9] {
            let expect = 2.5 * x * x + 0.25 * x.powi(4) + 0.125 * x;
            assert!((vp.value(&[x]).unwrap() - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_potential_gives_v_equal_q() {
        let p = poly_problem(vec![0.0], vec![1.0, -2.0, 0.5], 0.7, 2.0);
        let vp = modified_potential(&p);
        for x in [-1.0, 0.0, 3.0] {
            assert_eq!(vp.value(&[x]).unwrap(), p.q(&[x]).unwrap());
        }
    }

    #[test]
    fn lqg_modified_potential() {
        let vp = modified_potential(&model::lqg_1d(1.0).unwrap());
        for x in [-1.5, 0.0, 0.4] {
            assert!((vp.value(&[x]).unwrap() - (1.5 * x * x - 0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn potential_gradient_matches_closed_form() {
        let vp = modified_potential(&model::cubic_1d().unwrap());
        let mut g = [0.0];
        for x in [-1.0, 0.2, 2.0] {
            vp.gradient(&[x], &mut g).unwrap();
            let expect = 5.0 * x + x.powi(3) + 0.125;
            assert!((g[0] - expect).abs() < 1e-9 * expect.abs().max(1.0));
        }
    }

    fn line(lo: f64, hi: f64, n: usize) -> RectGrid {
        RectGrid::uniform_1d(lo, hi, n).unwrap()
    }

    #[test]
    fn value_to_f_trivial_cases() {
        let zero = poly_problem(vec![0.0], vec![0.0], 1.0, 1.0);
        let v = GridFunction::from_fn(line(-1.0, 1.0, 11), |_| Ok(0.0)).unwrap();
        let f = value_to_f(&v, &zero).unwrap();
        assert!(f.values().iter().all(|&x| x == 1.0));

        let p = model::cubic_1d().unwrap();
        let v = GridFunction::from_fn(line(-2.0, 2.0, 21), |x| Ok(-p.r() * p.nu(x)?)).unwrap();
        let f = value_to_f(&v, &p).unwrap();
        assert!(f.values().iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn value_to_f_reports_overflow_location() {
        let p = poly_problem(vec![0.0], vec![0.0], 0.1, 1.0);
        let v = GridFunction::from_fn(line(0.0, 1.0, 3), |x| Ok(-100.0 * x[0])).unwrap();
        match value_to_f(&v, &p) {
            Err(Error::Range { location, .. }) => assert_eq!(location, vec![0.5]),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn f_to_value_rejects_nonpositive() {
        let p = poly_problem(vec![0.0], vec![0.0], 1.0, 1.0);
        let f = GridFunction::from_fn(line(0.0, 1.0, 3), |x| Ok(0.5 - x[0])).unwrap();
        assert!(matches!(f_to_value(&f, &p), Err(Error::Domain { .. })));
        let one = GridFunction::from_fn(line(0.0, 1.0, 3), |_| Ok(1.0)).unwrap();
        assert!(f_to_value(&one, &p).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hermitize_trivial_and_errors() {
        let g = line(0.0, 1.0, 5);
        let f = GridFunction::from_fn(g.clone(), |x| Ok(1.0 + x[0])).unwrap();
        let ones = hermitize(&f, &f).unwrap();
        assert!(ones.values().iter().all(|&v| v == 1.0));
        let zero = GridFunction::from_fn(g.clone(), |_| Ok(0.0)).unwrap();
        assert!(matches!(hermitize(&f, &zero), Err(Error::Underflow { .. })));
        let neg = GridFunction::from_fn(g, |_| Ok(-1.0)).unwrap();
        assert!(matches!(hermitize(&neg, &f), Err(Error::Domain { .. })));
    }

    #[test]
    fn constant_f_gives_zero_closed_loop_drift() {
        let p = model::cubic_1d().unwrap();
        let f = GridFunction::from_fn(line(-3.0, 3.0, 61), |_| Ok(2.0)).unwrap();
        for x in [-1.3, 0.0, 2.2] {
            let u = control_from_f(&f, &p, &[x]).unwrap();
            let mut gn = [0.0];
            p.grad_nu(&[x], &mut gn).unwrap();
            assert!((u[0] - gn[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn control_below_floor_is_undefined() {
        let p = model::cubic_1d().unwrap();
        let f = GridFunction::from_fn(line(-1.0, 1.0, 21), |_| Ok(0.0)).unwrap();
        assert!(matches!(
            control_from_f(&f, &p, &[0.0]),
            Err(Error::ControlUndefined { .. })
        ));
    }

    #[test]
    fn design_constraint_fixtures() {
        let cubic = check_design_constraints(
            &modified_potential(&model::cubic_1d().unwrap()),
            &[(-5.0, 5.0)],
            2001,
        )
        .unwrap();
        assert!(cubic.a1_pass);
        assert!(!cubic.a2_pass);
        // min of 2.5x² + 0.25x⁴ + 0.125x is −1/640 near x = −1/40
        assert!((cubic.min_v + 1.0 / 640.0).abs() < 1e-5, "{}", cubic.min_v);
        assert!(cubic.required_shift > 0.0 && cubic.required_shift < 0.002);
        assert!((cubic.argmin_v[0] + 0.025).abs() < 0.01);

        let bowl = poly_problem(vec![0.0], vec![0.0, 0.0, 1.0], 1.0, 1.0);
        let r = check_design_constraints(&modified_potential(&bowl), &[(-5.0, 5.0)], 2001).unwrap();
        assert!(r.a1_pass && r.a2_pass);
        assert_eq!(r.required_shift, 0.0);

        let cap = poly_problem(vec![0.0], vec![0.0, 0.0, -1.0], 1.0, 1.0);
        let r = check_design_constraints(&modified_potential(&cap), &[(-5.0, 5.0)], 2001).unwrap();
        assert!(!r.a1_pass && !r.a2_pass);
    }

    #[test]
    fn design_constraints_2d_use_corner_rays() {
        let vp = modified_potential(&model::double_goal_2d().unwrap());
        let r = check_design_constraints(&vp, &[(-3.0, 3.0), (-3.0, 3.0)], 201).unwrap();
        // V grows along the axes, but the cos(x₁x₂) ripple makes it
        // non-monotone along the diagonals, so the heuristic flags corners.
        assert!(!r.a1_pass);
        assert!(r
            .a1_failed_directions
            .iter()
            .all(|d| d.iter().all(|c| c.abs() == 1.0)));
        assert!(r.min_q >= 0.0);
    }

    #[test]
    fn constant_cost_problem_design() {
        let p = ControlProblem::new(
            Arc::new(SeparablePolynomial::univariate(vec![0.0, 0.0, 0.5])),
            Arc::new(Constant { dim: 1, value: 1.0 }),
            1.0,
            1.0,
        )
        .unwrap();
        let r = check_design_constraints(&modified_potential(&p), &[(-4.0, 4.0)], 401).unwrap();
        assert!(r.a1_pass && r.a2_pass);
        assert!((r.min_v - 0.5).abs() < 1e-12);
    }
}
