//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use popcontrol::grid::{GridFunction, RectGrid};
use popcontrol::model::{self, Constant, ControlProblem, SeparablePolynomial};
use popcontrol::quadrature::{self, build_on_grid, QuadGrid, Terminal, DEFAULT_MAX_CELLS};
use popcontrol::simulate::{
    run_finite_horizon_experiment, run_stationary_experiment, BinLayout, ControlKind, Dynamics, Ensemble,
    FiniteHorizonExperiment, InitialDensity, QuadraturePolicy, Simulator, StationaryExperiment, ZeroPolicy,
};
use popcontrol::spectral::{solve_eigen, solve_eigen_auto, SpectralOptions};
use popcontrol::transforms::{
    check_design_constraints, dehermitize, f_to_value, hermitize, value_to_f, ModifiedPotential,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn opts(modes: usize) -> SpectralOptions {
    SpectralOptions {
        modes,
        ..Default::default()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn harmonic_oscillator() -> Outcome {
    let start = Instant::now();
    let p = ControlProblem::new(
        Arc::new(Constant { dim: 1, value: 0.0 }),
        Arc::new(SeparablePolynomial::univariate(vec![0.0, 0.0, 0.5])),
        1.0,
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let sol = solve_eigen(&p, (-10.0, 10.0), 2000, &opts(2)).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (l0, gap) = (sol.lambda0(), sol.gap());
    check(
        (l0 - 0.5).abs() <= 1e-4 && (gap - 1.0).abs() <= 1e-4 && secs < 5.0,
        format!("λ₀ = {l0:.8}, gap = {gap:.8}, {secs:.3} s"),
    )
}

fn gibbs_density() -> Outcome {
    let p = model::uncontrolled_gibbs_1d().map_err(|e| e.to_string())?;
    let sol = solve_eigen_auto(&p, &opts(3)).map_err(|e| e.to_string())?;
    let dens = sol.stationary_density();
    let xs = dens.grid().axis(0);
    let s2 = p.sigma() * p.sigma();
    let gibbs: Vec<f64> = xs.iter().map(|&x| (-2.0 * p.nu(&[x]).unwrap() / s2).exp()).collect();
    let z: f64 = gibbs.iter().sum::<f64>() * sol.h();
    let linf = gibbs
        .iter()
        .zip(dens.values())
        .map(|(g, v)| (g / z - v).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = sol.bulk_interval(1e-6);
    let (_, u) = sol.stationary_value_and_control().map_err(|e| e.to_string())?;
    let usup = xs
        .iter()
        .zip(u.values())
        .filter(|(&x, _)| x >= lo && x <= hi)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    check(
        linf <= 1e-3 && usup <= 1e-4,
        format!("p∞ L∞ error {linf:.2e}, sup|u∞| = {usup:.2e} on [{lo:.2}, {hi:.2}]"),
    )
}

/// RK4 for `−Ṗ = 2β − 2P − P²/R`, `−ṡ = σ²P/2` backwards from `P(T) = s(T) = 0`.
fn riccati_oracle(beta: f64, r: f64, sigma: f64, horizon: f64, times: &[f64]) -> Vec<(f64, f64)> {
    let h = 1e-4;
    let rhs = |p: f64| -> (f64, f64) { (2.0 * beta - 2.0 * p - p * p / r, 0.5 * sigma * sigma * p) };
    let steps = (horizon / h).round() as usize;
    let mut out = vec![(0.0, 0.0); times.len()];
    let (mut p, mut s) = (0.0, 0.0);
    for k in 0..=steps {
        let tau = k as f64 * h;
        for (i, &t) in times.iter().enumerate() {
            if ((horizon - t) - tau).abs() < 0.5 * h {
                out[i] = (p, s);
            }
        }
        // integrate in τ = T − t, where dP/dτ = 2β − 2P − P²/R
        let (k1, l1) = rhs(p);
        let (k2, l2) = rhs(p + 0.5 * h * k1);
        let (k3, l3) = rhs(p + 0.5 * h * k2);
        let (k4, l4) = rhs(p + h * k3);
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    }
    out
}

fn lqg_control() -> Outcome {
    let beta = model::LQG_DEFAULT_BETA;
    let p = model::lqg_1d(beta).map_err(|e| e.to_string())?;
    let r = p.r();
    let states = [-2.0, -1.6, -1.2, -0.8, -0.4, 0.4, 0.8, 1.2, 1.6, 2.0];

    let sol = solve_eigen_auto(&p, &opts(2)).map_err(|e| e.to_string())?;
    let a = r * (-1.0 + (1.0 + 2.0 * beta / r).sqrt());
    let (_, u) = sol.stationary_value_and_control().map_err(|e| e.to_string())?;
    let stat_err = states
        .iter()
        .map(|&x| rel(u.interpolate(&[x]).0, -a * x / r))
        .fold(0.0, f64::max);

    let horizon = 1.0;
    let times = [0.0, 0.2, 0.4, 0.6, 0.8];
    let q = quadrature::build(&p, &[(-4.0, 4.0)], 250, horizon, 0.0025).map_err(|e| e.to_string())?;
    let oracle = riccati_oracle(beta, r, p.sigma(), horizon, &times);
    let mut fh_err: f64 = 0.0;
    let mut f_err: f64 = 0.0;
    for (&t, &(pt, st)) in times.iter().zip(&oracle) {
        for &x in &states {
            let u = q.evaluate_control(t, &[x]).map_err(|e| e.to_string())?[0];
            fh_err = fh_err.max(rel(u, -pt * x / r));
            let f = q.evaluate_f(t, &[x]).map_err(|e| e.to_string())?;
            let v = pt * x * x / 2.0 + st;
            let f_exact = (-(v + r * p.nu(&[x]).unwrap()) / (p.sigma() * p.sigma() * r)).exp();
            f_err = f_err.max(rel(f, f_exact));
        }
    }
    check(
        stat_err <= 1e-2 && fh_err <= 1e-2 && f_err <= 1e-2,
        format!("stationary u∞ rel err {stat_err:.2e}; finite-horizon u* rel err {fh_err:.2e}, f rel err {f_err:.2e}"),
    )
}

fn stationary_population() -> Outcome {
    let p = model::cubic_1d().map_err(|e| e.to_string())?;
    let sol = solve_eigen_auto(&p, &opts(8)).map_err(|e| e.to_string())?;
    let dt = 0.01;
    let horizon = (5.0 / sol.gap() / dt).round() * dt;
    let (lo, hi) = sol.discretization().domain();
    let cfg = StationaryExperiment {
        agents: 500,
        realizations: 100,
        horizon,
        dt,
        snapshots: vec![0.0, horizon / 5.0, horizon / 2.0, horizon],
        bins: BinLayout::new(vec![(lo, hi)], vec![60]).map_err(|e| e.to_string())?,
        init: InitialDensity::Uniform(vec![(-2.0, 2.0)]),
        seed: 2024,
        l1_threshold: 0.1,
        max_escape: 0.01,
    };
    let rep = run_stationary_experiment(&p, &sol, &cfg).map_err(|e| e.to_string())?;
    let last = *rep.l1_series.last().unwrap();
    check(
        rep.passed && rep.monotone_after_first && rep.wall_clock_s < 60.0,
        format!(
            "{} samples, T = {horizon:.2}, L1 series {:?}, escapes {:.3}, {:.1} s (terminal {last:.4})",
            rep.samples,
            rep.l1_series.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            rep.escape_fraction,
            rep.wall_clock_s
        ),
    )
}

/// Implicit-Euler finite-volume Fokker-Planck solver with zero-flux walls,
/// used as an independent check of the modal decay rate.
fn fokker_planck_rate(xs: &[f64], drift_at_faces: &[f64], diffusion: f64, p0: &[f64], dt: f64, t_end: f64) -> f64 {
    let n = xs.len();
    let h = xs[1] - xs[0];
    // Flux F_{i+½} = b(p_i + p_{i+1})/2 − D(p_{i+1} − p_i)/h; dp_i/dt = −(F_{i+½} − F_{i−½})/h.
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n - 1 {
        let b = drift_at_faces[i];
        let (cl, cr) = (0.5 * b + diffusion / h, 0.5 * b - diffusion / h);
        // F = cl·p_i + cr·p_{i+1}
        diag[i] += cl / h;
        upper[i] += cr / h;
        lower[i + 1] -= cl / h;
        diag[i + 1] -= cr / h;
    }
    // (I + dt·A) p_new = p_old
    let a: Vec<f64> = lower.iter().map(|v| v * dt).collect();
    let b: Vec<f64> = diag.iter().map(|v| 1.0 + v * dt).collect();
    let c: Vec<f64> = upper.iter().map(|v| v * dt).collect();
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = c[0] / b[0];
        dp[0] = rhs[0] / b[0];
        for i in 1..n {
            let m = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / m;
            dp[i] = (rhs[i] - a[i] * dp[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    };
    let steps = (t_end / dt).round() as usize;
    let mut p = p0.to_vec();
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for k in 1..=steps {
        let next = solve(&p);
        let change: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        p = next;
        let t = k as f64 * dt;
        if t >= 0.2 * t_end {
            ts.push(t);
            logs.push(change.ln());
        }
    }
    let tm = ts.iter().sum::<f64>() / ts.len() as f64;
    let lm = logs.iter().sum::<f64>() / logs.len() as f64;
    let num: f64 = ts.iter().zip(&logs).map(|(t, l)| (t - tm) * (l - lm)).sum();
    let den: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    -num / den
}

fn perturbation_decay() -> Outcome {
    let p = model::cubic_1d().map_err(|e| e.to_string())?;
    let sol = solve_eigen(&p, (-3.0, 3.0), 1200, &opts(8)).map_err(|e| e.to_string())?;
    let gap = sol.gap();
    let e0 = sol.eigenfunctions()[0].values();
    let e1 = sol.eigenfunctions()[1].values();
    let ratio_max = e0.iter().zip(e1).map(|(a, b)| (b / a).abs()).fold(0.0, f64::max);
    let eps = 0.5 / ratio_max;
    let p0: Vec<f64> = e0.iter().zip(e1).map(|(a, b)| a * (a + eps * b)).collect();
    let p0 = GridFunction::new(sol.grid().clone(), p0).map_err(|e| e.to_string())?;

    // modal evolution
    let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let evo = sol.evolve_perturbation(&p0, &times).map_err(|e| e.to_string())?;
    let norms: Vec<f64> = times.iter().map(|&t| evo.hermitized_norm(t)).collect();
    let modal_rate = (norms[0] / norms[10]).ln() / times[10];

    // independent finite-volume Fokker-Planck run under the same control
    let (_, u) = sol.stationary_value_and_control().map_err(|e| e.to_string())?;
    let xs = sol.grid().axis(0);
    let faces: Vec<f64> = xs
        .windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            p.drift(&[m]).unwrap()[0] + u.interpolate(&[m]).0
        })
        .collect();
    let fv_rate = fokker_planck_rate(xs, &faces, 0.5 * p.sigma() * p.sigma(), p0.values(), 1e-4, 1.5);

    check(
        rel(modal_rate, gap) <= 0.05 && rel(fv_rate, gap) <= 0.05,
        format!("gap {gap:.5}, modal rate {modal_rate:.5}, finite-volume rate {fv_rate:.5} (ε = {eps:.2e})"),
    )
}

fn two_goal_population() -> Outcome {
    let start = Instant::now();
    let p = model::double_goal_2d().map_err(|e| e.to_string())?;
    let horizon = p.horizon().unwrap_or(4.0);
    let dt = 0.1;
    let box2 = [(-2.0, 2.0), (-2.0, 2.0)];
    let sol = Arc::new(quadrature::build(&p, &box2, 20, horizon, dt).map_err(|e| e.to_string())?);
    let goals = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
    let cfg = FiniteHorizonExperiment {
        agents: 400,
        horizon,
        dt,
        snapshots: vec![0.0, 1.0, 2.0, 3.0, 4.0],
        goals: goals.clone(),
        radius: 0.5,
        init: InitialDensity::Uniform(box2.to_vec()),
        seed: 7,
        dynamics: Dynamics::Langevin,
        max_escape: 0.01,
    };
    let free = run_finite_horizon_experiment(&p, &ZeroPolicy, &cfg).map_err(|e| e.to_string())?;
    let policy = QuadraturePolicy::new(sol.clone(), ControlKind::Optimal);
    let ctrl = run_finite_horizon_experiment(&p, &policy, &cfg).map_err(|e| e.to_string())?;
    let last = cfg.snapshots.len() - 1;
    let corners = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
    let clusters: Vec<f64> = corners.iter().map(|c| free.fraction_near(last, c, 0.5)).collect();
    let a = clusters.iter().all(|&f| f >= 0.15);
    let (g_free, g_ctrl) = (free.goal_fractions[last], ctrl.goal_fractions[last]);
    let b = g_ctrl >= g_free + 0.20;

    // minima of v̂ = −σ²R ln f at t = 0 in the two goal quadrants
    let k = 161;
    let mut best = [(f64::INFINITY, vec![0.0; 2]), (f64::INFINITY, vec![0.0; 2])];
    for i in 0..k {
        for j in 0..k {
            let x = vec![-2.0 + 4.0 * i as f64 / (k - 1) as f64, -2.0 + 4.0 * j as f64 / (k - 1) as f64];
            let slot = match (x[0] > 0.0 && x[1] > 0.0, x[0] < 0.0 && x[1] < 0.0) {
                (true, _) => 0,
                (_, true) => 1,
                _ => continue,
            };
            let v_hat = -p.sigma() * p.sigma() * p.r() * sol.evaluate_log_f(0.0, &x).map_err(|e| e.to_string())?;
            if v_hat < best[slot].0 {
                best[slot] = (v_hat, x);
            }
        }
    }
    let miss: Vec<f64> = best
        .iter()
        .zip(&goals)
        .map(|((_, x), g)| ((x[0] - g[0]).powi(2) + (x[1] - g[1]).powi(2)).sqrt())
        .collect();
    let c = miss.iter().all(|&m| m <= 0.3);
    let secs = start.elapsed().as_secs_f64();
    check(
        a && b && c && secs < 120.0,
        format!(
            "(a) uncontrolled clusters {:?} (b) goal fraction {g_ctrl:.3} vs uncontrolled {g_free:.3} \
             (c) v̂ minima {:?} / {:?}, offsets {:.3}, {:.3}; {secs:.1} s",
            clusters.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>(),
            best[0].1,
            best[1].1,
            miss[0],
            miss[1]
        ),
    )
}

fn quadrature_micro_oracles() -> Outcome {
    // V ≡ 0, unit terminal
    let free = ControlProblem::new(
        Arc::new(Constant { dim: 1, value: 0.0 }),
        Arc::new(Constant { dim: 1, value: 0.0 }),
        1.0,
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let sol = quadrature::build(&free, &[(-10.0, 10.0)], 100, 1.0, 0.1).map_err(|e| e.to_string())?;
    let mut unit_err: f64 = 0.0;
    for t in sol.times() {
        for i in 0..=50 {
            let x = -5.0 + 0.2 * i as f64;
            unit_err = unit_err.max((sol.evaluate_f(t, &[x]).map_err(|e| e.to_string())? - 1.0).abs());
        }
    }

    // single step with quadratic terminal on a kernel-aligned grid
    let (sigma, dt, xbar): (f64, f64, f64) = (0.8, 0.05, -0.6);
    let free_s = ControlProblem::new(
        Arc::new(Constant { dim: 1, value: 0.0 }),
        Arc::new(Constant { dim: 1, value: 0.0 }),
        sigma,
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let grid = QuadGrid::gaussian(&[xbar], &[sigma * dt.sqrt()], 4).map_err(|e| e.to_string())?;
    let square = Terminal::LogF(Arc::new(|x: &[f64]| 2.0 * x[0].abs().ln()));
    let one = build_on_grid(&free_s, grid, 1.0 - dt, 1.0, dt, square, DEFAULT_MAX_CELLS).map_err(|e| e.to_string())?;
    let step_err = (one.evaluate_f(1.0 - dt, &[xbar]).map_err(|e| e.to_string())? - (xbar * xbar + sigma * sigma * dt)).abs();

    // analytic vs finite-difference control
    let p = model::double_goal_2d().map_err(|e| e.to_string())?;
    let q = quadrature::build(&p, &[(-2.0, 2.0), (-2.0, 2.0)], 20, 4.0, 0.1).map_err(|e| e.to_string())?;
    let mut grad_err: f64 = 0.0;
    for (t, x) in [(0.0, [0.3, 0.7]), (1.0, [-1.2, 0.4]), (2.5, [0.9, -0.1]), (3.9, [-0.5, -1.5])] {
        let u = q.evaluate_integrator_control(t, &x).map_err(|e| e.to_string())?;
        for k in 0..2 {
            let h = 1e-5;
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = p.sigma() * p.sigma() * (q.evaluate_log_f(t, &xp).unwrap() - q.evaluate_log_f(t, &xm).unwrap()) / (2.0 * h);
            grad_err = grad_err.max((u[k] - fd).abs() / fd.abs().max(1.0));
        }
    }

    // Gauss-Hermite moments against N(c, s²)
    let (m, c, s) = (10usize, 0.4, 1.3);
    let g = QuadGrid::gaussian(&[c], &[s], m).map_err(|e| e.to_string())?;
    let rule = quadrature::gauss_hermite(m).map_err(|e| e.to_string())?;
    let mut mom_err: f64 = 0.0;
    for deg in 0..(2 * m) as i32 {
        let approx: f64 = g.nodes[0]
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w / std::f64::consts::PI.sqrt() * x.powi(deg))
            .sum();
        // E[(c + sZ)^deg] via the recursion on Hermite moments
        let mut exact = 0.0;
        for j in (0..=deg).step_by(2) {
            let binom = (0..j).fold(1.0, |acc, i| acc * (deg - i) as f64 / (i + 1) as f64);
            let dfact = (1..j).step_by(2).fold(1.0, |acc, v| acc * v as f64);
            exact += binom * s.powi(j) * dfact * c.powi(deg - j);
        }
        mom_err = mom_err.max((approx - exact).abs() / exact.abs().max(1.0));
    }

    check(
        unit_err <= 1e-6 && step_err <= 1e-9 && grad_err <= 1e-5 && mom_err <= 1e-12,
        format!(
            "unit terminal {unit_err:.1e}, single step {step_err:.1e}, gradient vs FD {grad_err:.1e}, moments {mom_err:.1e}"
        ),
    )
}

fn population_model_equivalence() -> Outcome {
    let p = model::double_goal_2d().map_err(|e| e.to_string())?;
    let sol = Arc::new(quadrature::build(&p, &[(-2.0, 2.0), (-2.0, 2.0)], 20, 4.0, 0.1).map_err(|e| e.to_string())?);
    let langevin = Simulator::new(&p, Dynamics::Langevin, 0.1).map_err(|e| e.to_string())?;
    let integrator = Simulator::new(&p, Dynamics::Integrator, 0.1).map_err(|e| e.to_string())?;
    let opt = QuadraturePolicy::new(sol.clone(), ControlKind::Optimal);
    let hat = QuadraturePolicy::new(sol, ControlKind::Integrator);
    let init = InitialDensity::Uniform(vec![(-2.0, 2.0), (-2.0, 2.0)]);
    let mut a = Ensemble::sample(100, &init, 11).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..40 {
        // identical states and noise streams; only the dynamics differ
        let mut b = a.clone();
        langevin.step(&mut a, &opt).map_err(|e| e.to_string())?;
        integrator.step(&mut b, &hat).map_err(|e| e.to_string())?;
        let dev = a.states().iter().zip(b.states()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
    }
    check(worst <= 1e-12, format!("max per-step deviation {worst:.1e} over 40 steps × 100 agents"))
}

fn transform_suite() -> Outcome {
    let p = model::cubic_1d().map_err(|e| e.to_string())?;
    let grid = RectGrid::uniform_1d(-3.0, 3.0, 301).map_err(|e| e.to_string())?;
    let v = GridFunction::from_fn(grid.clone(), |x| Ok(0.3 * x[0] * x[0] - 0.2 * x[0] + 0.1)).map_err(|e| e.to_string())?;
    let f = value_to_f(&v, &p).map_err(|e| e.to_string())?;
    let back = f_to_value(&f, &p).map_err(|e| e.to_string())?;
    let v_err = back
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    let dens = GridFunction::from_fn(grid, |x| Ok((-x[0] * x[0]).exp())).map_err(|e| e.to_string())?;
    let g = hermitize(&dens, &f).map_err(|e| e.to_string())?;
    let p_back = dehermitize(&g, &f).map_err(|e| e.to_string())?;
    let p_err = p_back
        .values()
        .iter()
        .zip(dens.values())
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max);

    let cubic = check_design_constraints(&ModifiedPotential::new(p), &[(-5.0, 5.0)], 2001).map_err(|e| e.to_string())?;
    let mk = |c: f64| {
        ControlProblem::new(
            Arc::new(Constant { dim: 1, value: 0.0 }),
            Arc::new(SeparablePolynomial::univariate(vec![0.0, 0.0, c])),
            1.0,
            1.0,
        )
        .unwrap()
    };
    let well = check_design_constraints(&ModifiedPotential::new(mk(1.0)), &[(-5.0, 5.0)], 2001).map_err(|e| e.to_string())?;
    let cap = check_design_constraints(&ModifiedPotential::new(mk(-1.0)), &[(-5.0, 5.0)], 2001).map_err(|e| e.to_string())?;
    let verdicts = cubic.a1_pass && !cubic.a2_pass && cubic.required_shift > 0.0 && well.a1_pass && well.a2_pass && !cap.a1_pass;
    check(
        v_err <= 1e-12 && p_err <= 1e-12 && verdicts,
        format!(
            "v↔f {v_err:.1e}, p↔g {p_err:.1e}; cubic confined {} shift {:.2e}, q=x² confined {} nonneg {}, q=−x² confined {}",
            cubic.a1_pass, cubic.required_shift, well.a1_pass, well.a2_pass, cap.a1_pass
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("harmonic-oscillator spectrum", harmonic_oscillator),
        ("Gibbs stationary density", gibbs_density),
        ("linear-quadratic control oracle", lqg_control),
        ("stationary population convergence", stationary_population),
        ("perturbation decay rate", perturbation_decay),
        ("two-goal population control", two_goal_population),
        ("quadrature micro-oracles", quadrature_micro_oracles),
        ("Langevin/integrator equivalence", population_model_equivalence),
        ("transform round trips and design checks", transform_suite),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
