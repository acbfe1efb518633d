#ifndef TM_H
#define TM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  TM_STATUS_OK = 0,
  /**
   * Invalid input; matches exit code 2 of the `tm` binary.
   */
  TM_STATUS_CONFIG_ERROR = 2,
  /**
   * Solver or factorization failure; matches exit code 3.
   */
  TM_STATUS_NUMERICAL_ERROR = 3,
  TM_STATUS_NULL_POINTER = 4,
  TM_STATUS_INVALID_UTF8 = 5,
  TM_STATUS_OUT_OF_RANGE = 6,
  TM_STATUS_PANIC = 7,
} TmStatus;

/**
 * Invariant eigenpairs of one surface.
 */
typedef struct TmSpectrum TmSpectrum;

/**
 * A subcritical maximizer with its multipliers.
 */
typedef struct TmState TmState;

/**
 * A mesh with its group action and assembled operators.
 */
typedef struct TmSurface TmSurface;

/**
 * Scalar results of a maximizer run.
 */
typedef struct {
  double log_value;
  double c_eps;
  size_t x_eps;
  double lambda_eps;
  double mu_eps;
  double el_residual;
  size_t iterations;
  bool converged;
} TmStateSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or an empty string. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *tm_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tm_version(void);

/**
 * Subdivided unit sphere; `group` is `trivial`, `antipodal`, `cyclic(m)` or
 * `dihedral(m)`.
 *
 * # Safety
 * `group` must be a NUL-terminated string and `out` a writable pointer.
 */
TmStatus tm_surface_sphere(uint32_t level, const char *group, TmSurface **out);

/**
 * Flat torus on an `nx × ny` grid; `translations` holds `count` pairs
 * `(sx, sy)` of grid shifts generating the group and may be null when
 * `count` is zero.
 *
 * # Safety
 * `translations` must point to `2·count` readable values.
 */
TmStatus tm_surface_torus(size_t nx,
                          size_t ny,
                          double width,
                          double height,
                          const size_t *translations,
                          size_t count,
                          TmSurface **out);

/**
 * Reads an OFF mesh; `group` is a group name or a JSON permutation file.
 *
 * # Safety
 * Both strings must be NUL-terminated.
 */
TmStatus tm_surface_load(const char *path, const char *group, TmSurface **out);

/**
 * # Safety
 * `surface` must come from a `tm_surface_*` constructor or be null.
 */
void tm_surface_free(TmSurface *surface);

/**
 * # Safety
 * `surface` must be a live handle.
 */
TmStatus tm_surface_vertex_count(const TmSurface *surface, size_t *out);

/**
 * `ℓ`, the smallest orbit size.
 *
 * # Safety
 * `surface` must be a live handle.
 */
TmStatus tm_surface_ell(const TmSurface *surface, size_t *out);

/**
 * # Safety
 * `surface` must be a live handle.
 */
TmStatus tm_surface_area(const TmSurface *surface, double *out);

/**
 * # Safety
 * `surface` must be a live handle and `path` NUL-terminated.
 */
TmStatus tm_surface_write_off(const TmSurface *surface, const char *path);

/**
 * The `count` smallest invariant eigenpairs.
 *
 * # Safety
 * `surface` must be a live handle.
 */
TmStatus tm_spectrum_compute(const TmSurface *surface, size_t count, TmSpectrum **out);

/**
 * # Safety
 * `spectrum` must come from `tm_spectrum_compute` or be null.
 */
void tm_spectrum_free(TmSpectrum *spectrum);

/**
 * Number of eigenvalues counted with multiplicity.
 *
 * # Safety
 * `spectrum` must be a live handle.
 */
TmStatus tm_spectrum_len(const TmSpectrum *spectrum, size_t *out);

/**
 * The `index`-th eigenvalue (0-based, with multiplicity).
 *
 * # Safety
 * `spectrum` must be a live handle.
 */
TmStatus tm_spectrum_eigenvalue(const TmSpectrum *spectrum, size_t index, double *out);

/**
 * `λ_j^G`, the `level`-th distinct eigenvalue (1-based), and its multiplicity.
 *
 * # Safety
 * `spectrum` must be a live handle; `multiplicity` may be null.
 */
TmStatus tm_spectrum_lambda(const TmSpectrum *spectrum,
                            size_t level,
                            double *out,
                            size_t *multiplicity);

/**
 * Regular constant `A` of the Green function with source at the
 * lowest-index minimal orbit, and `log(Vol + πℓe^{1+4πℓA})`.
 *
 * # Safety
 * Handles must be live; `log_upper_bound` may be null.
 */
TmStatus tm_green_constant(const TmSurface *surface,
                           const TmSpectrum *spectrum,
                           size_t level,
                           double alpha,
                           double *a,
                           double *log_upper_bound);

/**
 * Multi-start subcritical maximizer at `β = 4πℓ − epsilon` on `E_{level−1}^⊥`.
 *
 * # Safety
 * Handles must be live.
 */
TmStatus tm_maximize(const TmSurface *surface,
                     const TmSpectrum *spectrum,
                     size_t level,
                     double alpha,
                     double epsilon,
                     uint64_t random_seed,
                     TmState **out);

/**
 * # Safety
 * `state` must come from `tm_maximize` or be null.
 */
void tm_state_free(TmState *state);

/**
 * # Safety
 * `state` must be a live handle.
 */
TmStatus tm_state_summary(const TmState *state, TmStateSummary *out);

/**
 * Copies the vertex values into `buffer`, which must hold at least the
 * vertex count.
 *
 * # Safety
 * `buffer` must point to `len` writable doubles.
 */
TmStatus tm_state_values(const TmState *state, double *buffer, size_t len);

/**
 * Runs the experiment described by the JSON config file at `path`.
 *
 * # Safety
 * `path` must be NUL-terminated.
 */
TmStatus tm_run_experiment(const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TM_H */
