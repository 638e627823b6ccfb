//! C ABI for the popcontrol solvers.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! [`PcStatus`]; on failure [`pc_last_error`] describes the cause for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use popcontrol::model::{self, ControlProblem, SeparablePolynomial};
use popcontrol::quadrature::{self, QuadratureSolution};
use popcontrol::spectral::{self, SpectralOptions, SpectralSolution};
use popcontrol::transforms::{self, ModifiedPotential};
use popcontrol::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Truncation = 5,
    Size = 6,
    OutOfDomain = 7,
    Io = 8,
    Panic = 9,
}

/// A control problem: drift potential, state cost, noise and control weight.
pub struct PcProblem(ControlProblem);

/// Stationary solution: spectrum and ground state on a 1D grid.
pub struct PcSpectral(SpectralSolution);

/// Finite-horizon solution on a Gauss-Hermite grid.
pub struct PcQuadrature(QuadratureSolution);

/// Outcome of the confinement and nonnegativity checks on `V`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PcDesignReport {
    pub a1_pass: bool,
    pub a2_pass: bool,
    pub min_v: f64,
    pub required_shift: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PcStatus {
    match e {
        Error::Config(_) => PcStatus::Config,
        Error::Usage(_) => PcStatus::InvalidArgument,
        Error::Truncation(_) | Error::PerturbationClass { .. } => PcStatus::Truncation,
        Error::Size { .. } => PcStatus::Size,
        Error::Extrapolation { .. } | Error::Domain { .. } | Error::ControlUndefined { .. } => PcStatus::OutOfDomain,
        Error::Io(_) | Error::Serde(_) => PcStatus::Io,
        _ => PcStatus::Numerical,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (PcStatus, String)>) -> PcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside popcontrol".into());
            PcStatus::Panic
        }
    }
}

fn lib<T>(r: popcontrol::Result<T>) -> Result<T, (PcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PcStatus, String) {
    (PcStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (PcStatus, String) {
    (PcStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PcStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (PcStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), (PcStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (PcStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builtin problem by name: `cubic_1d`, `lqg_1d`, `uncontrolled_gibbs_1d`
/// or `double_goal_2d`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pc_problem_builtin(name: *const c_char, out: *mut *mut PcProblem) -> PcStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name).to_str().map_err(|e| invalid(e.to_string()))?;
        put(out, PcProblem(lib(model::builtin_problem(name))?))
    })
}

/// Separable polynomial problem. Axis `k` of ν has `nu_lens[k]`
/// coefficients (constant term first), taken consecutively from
/// `nu_coeffs`; likewise for q.
///
/// # Safety
/// The coefficient arrays must hold the sums of the respective lengths,
/// the length arrays must hold `dim` entries and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_problem_polynomial(
    dim: usize,
    nu_coeffs: *const f64,
    nu_lens: *const usize,
    q_coeffs: *const f64,
    q_lens: *const usize,
    sigma: f64,
    r: f64,
    out: *mut *mut PcProblem,
) -> PcStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        if nu_lens.is_null() || q_lens.is_null() {
            return Err(null("coefficient lengths"));
        }
        let split = |coeffs: *const f64, lens: *const usize, what: &str| -> Result<Vec<Vec<f64>>, (PcStatus, String)> {
            let lens = slice::from_raw_parts(lens, dim);
            let all = input(coeffs, lens.iter().sum(), what)?;
            let mut at = 0;
            Ok(lens
                .iter()
                .map(|&n| {
                    let axis = all[at..at + n].to_vec();
                    at += n;
                    axis
                })
                .collect())
        };
        let nu = lib(SeparablePolynomial::new(split(nu_coeffs, nu_lens, "nu coefficients")?))?;
        let q = lib(SeparablePolynomial::new(split(q_coeffs, q_lens, "q coefficients")?))?;
        let p = lib(ControlProblem::new(Arc::new(nu), Arc::new(q), sigma, r))?;
        put(out, PcProblem(p))
    })
}

/// Attach a finite horizon `T` to a problem.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_problem_set_horizon(problem: *mut PcProblem, horizon: f64) -> PcStatus {
    guard(|| {
        let p = problem.as_mut().ok_or_else(|| null("problem"))?;
        p.0 = lib(p.0.clone().with_horizon(horizon))?;
        Ok(())
    })
}

/// Dimension of the state space, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_problem_dim(problem: *const PcProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.dim())
}

/// Check confinement and nonnegativity of `V` on the box `[lo, hi]`
/// (`dim` entries each) with `n` points per axis.
///
/// # Safety
/// `lo` and `hi` must hold `dim` entries and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_problem_check_design(
    problem: *const PcProblem,
    lo: *const f64,
    hi: *const f64,
    n: usize,
    out: *mut PcDesignReport,
) -> PcStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let d = p.0.dim();
        let bounds: Vec<(f64, f64)> = input(lo, d, "lo")?.iter().copied().zip(input(hi, d, "hi")?.iter().copied()).collect();
        let rep = lib(transforms::check_design_constraints(&ModifiedPotential::new(p.0.clone()), &bounds, n))?;
        write(
            out,
            PcDesignReport {
                a1_pass: rep.a1_pass,
                a2_pass: rep.a2_pass,
                min_v: rep.min_v,
                required_shift: rep.required_shift,
            },
        )
    })
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_problem_free(problem: *mut PcProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solve the stationary problem on `[lo, hi]` with `n` interior points and
/// `modes` eigenpairs. With `lo >= hi` the box is chosen automatically.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pc_spectral_solve(
    problem: *const PcProblem,
    lo: f64,
    hi: f64,
    n: usize,
    modes: usize,
    out: *mut *mut PcSpectral,
) -> PcStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let opts = SpectralOptions {
            modes,
            ..SpectralOptions::default()
        };
        let sol = if lo < hi {
            spectral::solve_eigen(&p.0, (lo, hi), n, &opts)
        } else {
            spectral::solve_eigen_auto(&p.0, &opts)
        };
        put(out, PcSpectral(lib(sol)?))
    })
}

/// Number of computed eigenvalues, or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_spectral_modes(sol: *const PcSpectral) -> usize {
    sol.as_ref().map_or(0, |s| s.0.eigenvalues().len())
}

/// Number of grid points carrying the eigenfunctions, or 0 for null.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_spectral_points(sol: *const PcSpectral) -> usize {
    sol.as_ref().map_or(0, |s| s.0.grid().len())
}

/// Eigenvalue `k` of the scaled Schrödinger operator, ascending.
///
/// # Safety
/// `sol` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pc_spectral_eigenvalue(sol: *const PcSpectral, k: usize, out: *mut f64) -> PcStatus {
    guard(|| {
        let s = deref(sol, "solution")?;
        let v = *s
            .0
            .eigenvalues()
            .get(k)
            .ok_or_else(|| invalid(format!("mode {k} was not computed")))?;
        write(out, v)
    })
}

/// Optimal average cost per unit time, `σ²R·λ₀`.
///
/// # Safety
/// `sol` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pc_spectral_optimal_cost(sol: *const PcSpectral, out: *mut f64) -> PcStatus {
    guard(|| write(out, deref(sol, "solution")?.0.optimal_cost()))
}

/// Copy grid points, `p∞`, `v∞` and `u∞` into caller arrays of length
/// `len`, which must equal [`pc_spectral_points`]. Any output may be null.
///
/// # Safety
/// Non-null outputs must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pc_spectral_stationary(
    sol: *const PcSpectral,
    len: usize,
    x: *mut f64,
    p: *mut f64,
    v: *mut f64,
    u: *mut f64,
) -> PcStatus {
    guard(|| {
        let s = &deref(sol, "solution")?.0;
        if len != s.grid().len() {
            return Err(invalid(format!("buffers hold {len} values, the grid has {}", s.grid().len())));
        }
        let (value, control) = lib(s.stationary_value_and_control())?;
        let density = s.stationary_density();
        for (dst, src) in [
            (x, s.grid().axis(0)),
            (p, density.values()),
            (v, value.values()),
            (u, control.values()),
        ] {
            if !dst.is_null() {
                slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_spectral_free(sol: *mut PcSpectral) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Build the finite-horizon solution on a Gauss-Hermite grid of `m` points
/// per axis spanning `[lo, hi]`, from `t = 0` to the problem's horizon.
///
/// # Safety
/// `lo` and `hi` must hold one entry per dimension and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_quadrature_build(
    problem: *const PcProblem,
    lo: *const f64,
    hi: *const f64,
    m: usize,
    dt: f64,
    out: *mut *mut PcQuadrature,
) -> PcStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let horizon = p.0.horizon().ok_or_else(|| invalid("problem has no horizon"))?;
        let d = p.0.dim();
        let bounds: Vec<(f64, f64)> = input(lo, d, "lo")?.iter().copied().zip(input(hi, d, "hi")?.iter().copied()).collect();
        put(out, PcQuadrature(lib(quadrature::build(&p.0, &bounds, m, horizon, dt))?))
    })
}

/// `ln f(t, x)` at a grid time `t`.
///
/// # Safety
/// `x` must hold one entry per dimension and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_quadrature_log_f(sol: *const PcQuadrature, t: f64, x: *const f64, out: *mut f64) -> PcStatus {
    guard(|| {
        let s = &deref(sol, "solution")?.0;
        let x = input(x, s.problem().dim(), "x")?;
        write(out, lib(s.evaluate_log_f(t, x))?)
    })
}

/// Optimal control `u*(t, x)` written to `u` (one entry per dimension).
///
/// # Safety
/// `x` and `u` must hold one entry per dimension.
#[no_mangle]
pub unsafe extern "C" fn pc_quadrature_control(sol: *const PcQuadrature, t: f64, x: *const f64, u: *mut f64) -> PcStatus {
    guard(|| {
        let s = &deref(sol, "solution")?.0;
        let d = s.problem().dim();
        let x = input(x, d, "x")?;
        if u.is_null() {
            return Err(null("u"));
        }
        let v = lib(s.evaluate_control(t, x))?;
        slice::from_raw_parts_mut(u, d).copy_from_slice(&v);
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_quadrature_free(sol: *mut PcQuadrature) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
