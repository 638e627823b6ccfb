#ifndef POPCONTROL_H
#define POPCONTROL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PcStatus {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_POINTER = 1,
  PC_STATUS_INVALID_ARGUMENT = 2,
  PC_STATUS_CONFIG = 3,
  PC_STATUS_NUMERICAL = 4,
  PC_STATUS_TRUNCATION = 5,
  PC_STATUS_SIZE = 6,
  PC_STATUS_OUT_OF_DOMAIN = 7,
  PC_STATUS_IO = 8,
  PC_STATUS_PANIC = 9,
} PcStatus;

/**
 * A control problem: drift potential, state cost, noise and control weight.
 */
typedef struct PcProblem PcProblem;

/**
 * Finite-horizon solution on a Gauss-Hermite grid.
 */
typedef struct PcQuadrature PcQuadrature;

/**
 * Stationary solution: spectrum and ground state on a 1D grid.
 */
typedef struct PcSpectral PcSpectral;

/**
 * Outcome of the confinement and nonnegativity checks on `V`.
 */
typedef struct PcDesignReport {
  bool a1_pass;
  bool a2_pass;
  double min_v;
  double required_shift;
} PcDesignReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *pc_last_error(void);

/**
 * Builtin problem by name: `cubic_1d`, `lqg_1d`, `uncontrolled_gibbs_1d`
 * or `double_goal_2d`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PcStatus pc_problem_builtin(const char *name, struct PcProblem **out);

/**
 * Separable polynomial problem. Axis `k` of ν has `nu_lens[k]`
 * coefficients (constant term first), taken consecutively from
 * `nu_coeffs`; likewise for q.
 *
 * # Safety
 * The coefficient arrays must hold the sums of the respective lengths,
 * the length arrays must hold `dim` entries and `out` must be valid.
 */
enum PcStatus pc_problem_polynomial(size_t dim,
                                    const double *nu_coeffs,
                                    const size_t *nu_lens,
                                    const double *q_coeffs,
                                    const size_t *q_lens,
                                    double sigma,
                                    double r,
                                    struct PcProblem **out);

/**
 * Attach a finite horizon `T` to a problem.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum PcStatus pc_problem_set_horizon(struct PcProblem *problem, double horizon);

/**
 * Dimension of the state space, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t pc_problem_dim(const struct PcProblem *problem);

/**
 * Check confinement and nonnegativity of `V` on the box `[lo, hi]`
 * (`dim` entries each) with `n` points per axis.
 *
 * # Safety
 * `lo` and `hi` must hold `dim` entries and `out` must be valid.
 */
enum PcStatus pc_problem_check_design(const struct PcProblem *problem,
                                      const double *lo,
                                      const double *hi,
                                      size_t n,
                                      struct PcDesignReport *out);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void pc_problem_free(struct PcProblem *problem);

/**
 * Solve the stationary problem on `[lo, hi]` with `n` interior points and
 * `modes` eigenpairs. With `lo >= hi` the box is chosen automatically.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum PcStatus pc_spectral_solve(const struct PcProblem *problem,
                                double lo,
                                double hi,
                                size_t n,
                                size_t modes,
                                struct PcSpectral **out);

/**
 * Number of computed eigenvalues, or 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t pc_spectral_modes(const struct PcSpectral *sol);

/**
 * Number of grid points carrying the eigenfunctions, or 0 for null.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t pc_spectral_points(const struct PcSpectral *sol);

/**
 * Eigenvalue `k` of the scaled Schrödinger operator, ascending.
 *
 * # Safety
 * `sol` must be a live handle and `out` valid.
 */
enum PcStatus pc_spectral_eigenvalue(const struct PcSpectral *sol, size_t k, double *out);

/**
 * Optimal average cost per unit time, `σ²R·λ₀`.
 *
 * # Safety
 * `sol` must be a live handle and `out` valid.
 */
enum PcStatus pc_spectral_optimal_cost(const struct PcSpectral *sol, double *out);

/**
 * Copy grid points, `p∞`, `v∞` and `u∞` into caller arrays of length
 * `len`, which must equal [`pc_spectral_points`]. Any output may be null.
 *
 * # Safety
 * Non-null outputs must hold `len` doubles.
 */
enum PcStatus pc_spectral_stationary(const struct PcSpectral *sol,
                                     size_t len,
                                     double *x,
                                     double *p,
                                     double *v,
                                     double *u);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void pc_spectral_free(struct PcSpectral *sol);

/**
 * Build the finite-horizon solution on a Gauss-Hermite grid of `m` points
 * per axis spanning `[lo, hi]`, from `t = 0` to the problem's horizon.
 *
 * # Safety
 * `lo` and `hi` must hold one entry per dimension and `out` must be valid.
 */
enum PcStatus pc_quadrature_build(const struct PcProblem *problem,
                                  const double *lo,
                                  const double *hi,
                                  size_t m,
                                  double dt,
                                  struct PcQuadrature **out);

/**
 * `ln f(t, x)` at a grid time `t`.
 *
 * # Safety
 * `x` must hold one entry per dimension and `out` must be valid.
 */
enum PcStatus pc_quadrature_log_f(const struct PcQuadrature *sol,
                                  double t,
                                  const double *x,
                                  double *out);

/**
 * Optimal control `u*(t, x)` written to `u` (one entry per dimension).
 *
 * # Safety
 * `x` and `u` must hold one entry per dimension.
 */
enum PcStatus pc_quadrature_control(const struct PcQuadrature *sol,
                                    double t,
                                    const double *x,
                                    double *u);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void pc_quadrature_free(struct PcQuadrature *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POPCONTROL_H */
