#ifndef GBADMM_H
#define GBADMM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum GbStatus {
  GB_STATUS_OK = 0,
  GB_STATUS_NULL_POINTER = 1,
  GB_STATUS_INVALID_ARGUMENT = 2,
  GB_STATUS_DIMENSION_MISMATCH = 3,
  GB_STATUS_SINGULAR = 4,
  GB_STATUS_NOT_CONVERGED = 5,
  GB_STATUS_DIVERGED = 6,
  GB_STATUS_NO_CERTIFIABLE_EPSILON = 7,
  GB_STATUS_INTERNAL = 8,
} GbStatus;

/**
 * Opaque boundary model.
 */
typedef struct GbModel GbModel;

/**
 * Opaque solve result.
 */
typedef struct GbSolveResult GbSolveResult;

/**
 * Augmented-Lagrangian settings shared by ADMM and ALM.
 */
typedef struct GbAugLagParams {
  double rho0;
  double beta;
  double alpha;
  double tol_inner;
  double tol_outer;
  size_t max_outer;
  size_t max_inner;
} GbAugLagParams;

/**
 * Summary of a quasi-convexity grid certificate.
 */
typedef struct GbCertSummary {
  bool pass;
  double min_s1;
  double max_det_b2;
  size_t points;
} GbCertSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *gb_last_error_message(void);

/**
 * Creates a model from `n` Burgers vectors stored row-wise in `burgers`
 * (`3n` doubles). Angles are in radians.
 *
 * # Safety
 * `burgers` must point to `3n` doubles, `axis` and `normal` to three doubles
 * each, and `out` must be a valid pointer to write the handle into.
 */
enum GbStatus gb_model_new(const double *burgers,
                           size_t n,
                           double theta,
                           const double *axis,
                           const double *normal,
                           double nu,
                           double core_radius,
                           double epsilon,
                           struct GbModel **out);

/**
 * The six-family {111} twist boundary in aluminium with `ε = θ²/400`.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle into.
 */
enum GbStatus gb_model_fcc111(double theta_deg, struct GbModel **out);

/**
 * The three in-plane {111} families with `ε = θ²/400`.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle into.
 */
enum GbStatus gb_model_fcc111_inplane(double theta_deg, struct GbModel **out);

/**
 * # Safety
 * `m` must be NULL or a handle from a `gb_model_*` constructor that has not
 * been freed.
 */
void gb_model_free(struct GbModel *m);

/**
 * Number of Burgers-vector families, or 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live model handle.
 */
size_t gb_model_num_blocks(const struct GbModel *m);

/**
 * Total energy `Σ f_j(u_j)`; `u` holds `2J` doubles.
 *
 * # Safety
 * `m` must be a live model handle, `u` must point to `len` doubles and
 * `out` must be writable.
 */
enum GbStatus gb_model_energy(const struct GbModel *m, const double *u, size_t len, double *out);

/**
 * Constraint residual `Σ A_j u_j - c` written to `out[0..6]`.
 *
 * # Safety
 * `m` must be a live model handle, `u` must point to `len` doubles and
 * `out` must point to six writable doubles.
 */
enum GbStatus gb_model_residual(const struct GbModel *m, const double *u, size_t len, double *out);

/**
 * ADMM defaults: `ρ⁽⁰⁾ = 100`, `β = 1.001`, `α = 5e-4`, tolerances 1e-8 and 1e-6.
 */
struct GbAugLagParams gb_auglag_params_default(void);

/**
 * Multi-block ADMM from `u = 0`, `w = 0`. A run that stops without
 * converging still returns a result; check [`gb_result_converged`].
 *
 * # Safety
 * `m` and `params` must be valid, `out` must be writable.
 */
enum GbStatus gb_admm_solve(const struct GbModel *m,
                            const struct GbAugLagParams *params,
                            struct GbSolveResult **out);

/**
 * Augmented Lagrangian method from `u = 0`, `w = 0`.
 *
 * # Safety
 * `m` and `params` must be valid, `out` must be writable.
 */
enum GbStatus gb_alm_solve(const struct GbModel *m,
                           const struct GbAugLagParams *params,
                           struct GbSolveResult **out);

/**
 * # Safety
 * `r` must be NULL or a live result handle.
 */
void gb_result_free(struct GbSolveResult *r);

/**
 * Copies the final state (`2J` doubles) into `out`.
 *
 * # Safety
 * `r` must be a live result handle and `out` must point to `len` writable
 * doubles.
 */
enum GbStatus gb_result_state(const struct GbSolveResult *r, double *out, size_t len);

/**
 * Outer iterations, or 0 for NULL.
 *
 * # Safety
 * `r` must be NULL or a live result handle.
 */
size_t gb_result_iterations(const struct GbSolveResult *r);

/**
 * Final constraint residual norm, NaN for NULL.
 *
 * # Safety
 * `r` must be NULL or a live result handle.
 */
double gb_result_residual_norm(const struct GbSolveResult *r);

/**
 * # Safety
 * `r` must be NULL or a live result handle.
 */
bool gb_result_converged(const struct GbSolveResult *r);

/**
 * Spectral radius of the three-block counterexample iteration matrix for
 * `A = [[1,1,1],[1,1,2],[1,2,2]]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GbStatus gb_counterexample_spectral_radius(double beta, double *out);

/**
 * Quasi-convexity certificate of a three-family model on the disk of
 * radius π/12.
 *
 * # Safety
 * `m` must be a live model handle and `out` writable.
 */
enum GbStatus gb_certify(const struct GbModel *m,
                         double p,
                         size_t n_r,
                         size_t n_phi,
                         struct GbCertSummary *out);

/**
 * Smallest certified `ε/θ²` of a three-family model; the model's own `ε`
 * is ignored.
 *
 * # Safety
 * `m` must be a live model handle and `ratio` writable.
 */
enum GbStatus gb_epsilon0(const struct GbModel *m,
                          double p,
                          size_t n_r,
                          size_t n_phi,
                          double *ratio);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* GBADMM_H */
