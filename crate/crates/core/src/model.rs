//! Control problem definition: Langevin potential, state cost, noise and
//! control weights, plus the builtin example problems.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_finite, Error, Result};

/// A scalar field on ℝ^d that can report its value, gradient and Laplacian.
///
/// Builtin fields implement all three analytically. Value-only fields can be
/// wrapped in [`ValueOnlyField`], which falls back to finite differences and
/// reports `is_analytic() == false`.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn laplacian(&self, x: &[f64]) -> f64;

    /// `false` when derivatives come from finite differences.
    fn is_analytic(&self) -> bool {
        true
    }
}

/// Additively separable polynomial `Σ_k p_k(x_k)`.
///
/// Each axis carries its own coefficient list, lowest order first.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparablePolynomial {
    axes: Vec<Vec<f64>>,
}

impl SeparablePolynomial {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Config("polynomial field needs at least one axis".into()));
        }
        if axes.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Config("polynomial coefficients must be finite".into()));
        }
        Ok(Self { axes })
    }

    pub fn univariate(coeffs: Vec<f64>) -> Self {
        Self { axes: vec![coeffs] }
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.axes
    }

    fn eval_axis(c: &[f64], x: f64) -> (f64, f64, f64) {
        // Horner for value, first and second derivatives together.
        let mut p = 0.0;
        let mut dp = 0.0;
        let mut ddp = 0.0;
        for &a in c.iter().rev() {
            ddp = ddp * x + 2.0 * dp;
            dp = dp * x + p;
            p = p * x + a;
        }
        (p, dp, ddp)
    }
}

impl ScalarField for SeparablePolynomial {
    fn dim(&self) -> usize {
        self.axes.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.axes
            .iter()
            .zip(x)
            .map(|(c, &xi)| Self::eval_axis(c, xi).0)
            .sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((c, &xi), o) in self.axes.iter().zip(x).zip(out.iter_mut()) {
            *o = Self::eval_axis(c, xi).1;
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.axes
            .iter()
            .zip(x)
            .map(|(c, &xi)| Self::eval_axis(c, xi).2)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl ScalarField for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn laplacian(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

/// Four-well planar potential `½cos²(x₁x₂) + (x₁⁴ + x₂⁴)/24`.
///
/// Its negative gradient is the passive drift
/// `(cos(x₁x₂)sin(x₁x₂)x₂ − x₁³/6, cos(x₁x₂)sin(x₁x₂)x₁ − x₂³/6)`, whose
/// stable equilibria sit on the diagonals near `(±1.16, ±1.16)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FourWellPotential;

impl ScalarField for FourWellPotential {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let c = (x[0] * x[1]).cos();
        0.5 * c * c + (x[0].powi(4) + x[1].powi(4)) / 24.0
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let s2 = (2.0 * x[0] * x[1]).sin();
        out[0] = -0.5 * s2 * x[1] + x[0].powi(3) / 6.0;
        out[1] = -0.5 * s2 * x[0] + x[1].powi(3) / 6.0;
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        -(2.0 * x[0] * x[1]).cos() * r2 + 0.5 * r2
    }
}

/// `½·weight·|x − a|²·|x − b|²`: zero exactly at the two goals `a` and `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoGoalCost {
    pub weight: f64,
    pub goal_a: Vec<f64>,
    pub goal_b: Vec<f64>,
}

impl ScalarField for TwoGoalCost {
    fn dim(&self) -> usize {
        self.goal_a.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let da = sq_dist(x, &self.goal_a);
        let db = sq_dist(x, &self.goal_b);
        0.5 * self.weight * da * db
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let da = sq_dist(x, &self.goal_a);
        let db = sq_dist(x, &self.goal_b);
        for k in 0..x.len() {
            out[k] = self.weight * ((x[k] - self.goal_a[k]) * db + (x[k] - self.goal_b[k]) * da);
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        let da = sq_dist(x, &self.goal_a);
        let db = sq_dist(x, &self.goal_b);
        let cross: f64 = (0..x.len())
            .map(|k| (x[k] - self.goal_a[k]) * (x[k] - self.goal_b[k]))
            .sum();
        self.weight * (d * (da + db) + 4.0 * cross)
    }
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Field given by its value only; derivatives by central differences.
///
/// Lower accuracy than the analytic fields: gradient error is O(h²) with
/// h ≈ 6e−6, Laplacian error O(h²) with h ≈ 1e−4 plus cancellation.
#[derive(Clone)]
pub struct ValueOnlyField {
    dim: usize,
    f: Arc<ValueFn>,
}

impl ValueOnlyField {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }
}

impl fmt::Debug for ValueOnlyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ValueOnlyField").field("dim", &self.dim).finish()
    }
}

impl ScalarField for ValueOnlyField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let mut y = x.to_vec();
        for k in 0..self.dim {
            let h = 6e-6 * (1.0 + x[k].abs());
            y[k] = x[k] + h;
            let fp = (self.f)(&y);
            y[k] = x[k] - h;
            let fm = (self.f)(&y);
            y[k] = x[k];
            out[k] = (fp - fm) / (2.0 * h);
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        let f0 = (self.f)(x);
        let mut lap = 0.0;
        for k in 0..self.dim {
            let h = 1e-4 * (1.0 + x[k].abs());
            y[k] = x[k] + h;
            let fp = (self.f)(&y);
            y[k] = x[k] - h;
            let fm = (self.f)(&y);
            y[k] = x[k];
            lap += (fp - 2.0 * f0 + fm) / (h * h);
        }
        lap
    }

    fn is_analytic(&self) -> bool {
        false
    }
}

/// Optimal control problem for agents obeying
/// `dx = −∇ν(x)dt + u dt + σ dw` with running cost `q(x) + (R/2)|u|²`.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    name: String,
    nu: Arc<dyn ScalarField>,
    q: Arc<dyn ScalarField>,
    sigma: f64,
    r: f64,
    dim: usize,
    horizon: Option<f64>,
}

impl ControlProblem {
    pub fn new(
        nu: Arc<dyn ScalarField>,
        q: Arc<dyn ScalarField>,
        sigma: f64,
        r: f64,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Config(format!("R must be positive, got {r}")));
        }
        let dim = nu.dim();
        if dim == 0 || q.dim() != dim {
            return Err(Error::Config(format!(
                "nu and q dimensions disagree ({} vs {})",
                dim,
                q.dim()
            )));
        }
        Ok(Self {
            name: "custom".into(),
            nu,
            q,
            sigma,
            r,
            dim,
            horizon: None,
        })
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        self.horizon = Some(horizon);
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }
    pub fn nu_field(&self) -> &Arc<dyn ScalarField> {
        &self.nu
    }
    pub fn q_field(&self) -> &Arc<dyn ScalarField> {
        &self.q
    }

    /// True when every field derivative is analytic.
    pub fn is_analytic(&self) -> bool {
        self.nu.is_analytic() && self.q.is_analytic()
    }

    pub fn nu(&self, x: &[f64]) -> Result<f64> {
        check_finite("nu", x, self.nu.value(x))
    }

    pub fn grad_nu(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.nu.gradient(x, out);
        for &g in out.iter() {
            check_finite("grad nu", x, g)?;
        }
        Ok(())
    }

    pub fn laplacian_nu(&self, x: &[f64]) -> Result<f64> {
        check_finite("laplacian nu", x, self.nu.laplacian(x))
    }

    pub fn q(&self, x: &[f64]) -> Result<f64> {
        check_finite("q", x, self.q.value(x))
    }

    /// Passive drift `−∇ν(x)`, written into `out`.
    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.grad_nu(x, out)?;
        for o in out.iter_mut() {
            *o = -*o;
        }
        Ok(())
    }

    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.drift_into(x, &mut out)?;
        Ok(out)
    }
}

/// Names accepted by [`builtin_problem`].
pub const BUILTIN_NAMES: [&str; 4] = ["cubic_1d", "lqg_1d", "uncontrolled_gibbs_1d", "double_goal_2d"];

/// Default state-cost weight of `lqg_1d` (q = βx²).
pub const LQG_DEFAULT_BETA: f64 = 1.0;

/// Constant state cost of `uncontrolled_gibbs_1d`.
pub const GIBBS_CONSTANT_COST: f64 = 1.0;

pub fn builtin_problem(name: &str) -> Result<ControlProblem> {
    match name {
        "cubic_1d" => cubic_1d(),
        "lqg_1d" => lqg_1d(LQG_DEFAULT_BETA),
        "uncontrolled_gibbs_1d" => uncontrolled_gibbs_1d(),
        "double_goal_2d" => double_goal_2d(),
        other => Err(Error::Config(format!(
            "unknown builtin problem `{other}`; valid names: {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

/// Unstable cubic drift ν = −x³/3 stabilised by q = 2.5x², σ = R = ½.
pub fn cubic_1d() -> Result<ControlProblem> {
    let nu = SeparablePolynomial::univariate(vec![0.0, 0.0, 0.0, -1.0 / 3.0]);
    let q = SeparablePolynomial::univariate(vec![0.0, 0.0, 2.5]);
    Ok(ControlProblem::new(Arc::new(nu), Arc::new(q), 0.5, 0.5)?.with_name("cubic_1d"))
}

/// Ornstein-Uhlenbeck agent ν = x²/2 with q = βx², σ = R = 1.
pub fn lqg_1d(beta: f64) -> Result<ControlProblem> {
    if !(beta > 0.0) {
        return Err(Error::Config(format!("lqg beta must be positive, got {beta}")));
    }
    let nu = SeparablePolynomial::univariate(vec![0.0, 0.0, 0.5]);
    let q = SeparablePolynomial::univariate(vec![0.0, 0.0, beta]);
    Ok(ControlProblem::new(Arc::new(nu), Arc::new(q), 1.0, 1.0)?.with_name("lqg_1d"))
}

/// ν = x²/2 with constant cost: the optimal control vanishes.
pub fn uncontrolled_gibbs_1d() -> Result<ControlProblem> {
    let nu = SeparablePolynomial::univariate(vec![0.0, 0.0, 0.5]);
    let q = Constant {
        dim: 1,
        value: GIBBS_CONSTANT_COST,
    };
    Ok(ControlProblem::new(Arc::new(nu), Arc::new(q), 1.0, 1.0)?.with_name("uncontrolled_gibbs_1d"))
}

/// Four-well planar potential with goals at (1,1) and (−1,−1);
/// R = 1, Q = 0.1, σ = 0.2, T = 4.
pub fn double_goal_2d() -> Result<ControlProblem> {
    let q = TwoGoalCost {
        weight: 0.1,
        goal_a: vec![1.0, 1.0],
        goal_b: vec![-1.0, -1.0],
    };
    ControlProblem::new(Arc::new(FourWellPotential), Arc::new(q), 0.2, 1.0)?
        .with_horizon(4.0)
        .map(|p| p.with_name("double_goal_2d"))
}
