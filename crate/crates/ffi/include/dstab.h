#ifndef DSTAB_H
#define DSTAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every function.
 */
typedef enum DstabStatus {
  DSTAB_STATUS_OK = 0,
  DSTAB_STATUS_NULL_POINTER = 1,
  DSTAB_STATUS_INVALID_ARGUMENT = 2,
  DSTAB_STATUS_DIMENSION_MISMATCH = 3,
  DSTAB_STATUS_NON_FINITE = 4,
  DSTAB_STATUS_SINGULAR_PENCIL = 5,
  DSTAB_STATUS_NO_CONVERGENCE = 6,
  DSTAB_STATUS_BUFFER_TOO_SMALL = 7,
  DSTAB_STATUS_PANIC = 99,
} DstabStatus;

typedef enum DstabTermination {
  DSTAB_TERMINATION_CONVERGED = 0,
  DSTAB_TERMINATION_TIME_LIMIT = 1,
  DSTAB_TERMINATION_ITER_LIMIT = 2,
} DstabTermination;

/**
 * Opaque square pair `(E, A)`.
 */
typedef struct DstabPair DstabPair;

/**
 * Opaque outcome of [`dstab_stabilize`].
 */
typedef struct DstabResult DstabResult;

typedef struct DstabTolerances {
  double rank_rtol;
  double eig_atol;
  double stability_tol;
} DstabTolerances;

/**
 * Solver controls. `ridge <= 0` selects the default `1e-12 * n`.
 */
typedef struct DstabSolverConfig {
  uint64_t max_outer_iters;
  double time_limit_seconds;
  double rel_decrease_tol;
  uint64_t inner_fgm_steps;
  double ridge;
  bool momentum_restart;
  struct DstabTolerances tolerances;
} DstabSolverConfig;

/**
 * Scalar verdicts of the admissibility analysis.
 */
typedef struct DstabAnalysis {
  bool regular;
  bool index_at_most_one;
  bool stable;
  bool admissible;
  size_t rank_e;
  size_t finite_count;
  size_t infinite_count;
  /**
   * Largest modulus among finite eigenvalues, 0 when there are none.
   */
  double spectral_radius;
} DstabAnalysis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default tolerances.
 */
struct DstabTolerances dstab_tolerances_default(void);

/**
 * Default solver configuration (60 s budget, relative tolerance 1e-8).
 */
struct DstabSolverConfig dstab_solver_config_default(void);

/**
 * Creates a pair from row-major `n x n` arrays. A null `e` means `E = I`.
 *
 * # Safety
 * `e` (when non-null) and `a` must point to `n * n` readable doubles and
 * `out` to writable storage for one handle.
 */
enum DstabStatus dstab_pair_new(size_t n, const double *e, const double *a, struct DstabPair **out);

/**
 * Releases a pair. Null is ignored.
 *
 * # Safety
 * `pair` must come from [`dstab_pair_new`] and not be used afterwards.
 */
void dstab_pair_free(struct DstabPair *pair);

/**
 * Dimension of the pair, or 0 for a null handle.
 *
 * # Safety
 * `pair` must be null or a live handle.
 */
size_t dstab_pair_dim(const struct DstabPair *pair);

/**
 * Runs the admissibility analysis. A null `tol` selects the defaults.
 *
 * # Safety
 * `pair` must be a live handle, `tol` null or readable, `out` writable.
 */
enum DstabStatus dstab_analyze(const struct DstabPair *pair,
                               const struct DstabTolerances *tol,
                               struct DstabAnalysis *out);

/**
 * Copies the finite eigenvalues into `re` / `im` (capacity `cap`) and
 * stores their number in `count`. With too small a buffer the count is
 * still written and `BufferTooSmall` is returned.
 *
 * # Safety
 * `re` and `im` must hold `cap` writable doubles (or be null with
 * `cap == 0`); `count` must be writable.
 */
enum DstabStatus dstab_finite_spectrum(const struct DstabPair *pair,
                                       const struct DstabTolerances *tol,
                                       double *re,
                                       double *im,
                                       size_t cap,
                                       size_t *count);

/**
 * Computes a nearby admissible pair with `rank(Ê) = r`. `r == 0` selects
 * the numerical rank of `E` (at least 1); a null `config` the defaults.
 *
 * # Safety
 * `pair` must be a live handle, `config` null or readable, `out` writable.
 */
enum DstabStatus dstab_stabilize(const struct DstabPair *pair,
                                 size_t r,
                                 const struct DstabSolverConfig *config,
                                 struct DstabResult **out);

/**
 * Releases a result. Null is ignored.
 *
 * # Safety
 * `result` must come from [`dstab_stabilize`] and not be used afterwards.
 */
void dstab_result_free(struct DstabResult *result);

/**
 * Final objective `|E - Ê|_F^2 + |A - Â|_F^2`, NaN for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double dstab_result_error(const struct DstabResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t dstab_result_iterations(const struct DstabResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
double dstab_result_elapsed_seconds(const struct DstabResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t dstab_result_rank(const struct DstabResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
bool dstab_result_admissible(const struct DstabResult *result);

/**
 * # Safety
 * `result` must be a live handle and `out` writable.
 */
enum DstabStatus dstab_result_termination(const struct DstabResult *result,
                                          enum DstabTermination *out);

/**
 * Copies `Ê` and `Â` (row-major, `n * n` each) into caller buffers.
 * Either output may be null to skip it.
 *
 * # Safety
 * Non-null `e_hat` / `a_hat` must hold `n * n` writable doubles.
 */
enum DstabStatus dstab_result_copy_pair(const struct DstabResult *result,
                                        double *e_hat,
                                        double *a_hat);

/**
 * Number of rows in the error history, including the initial objective.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t dstab_result_trace_len(const struct DstabResult *result);

/**
 * Copies the error history `e(0), e(1), ...` into `errors` (capacity `cap`).
 *
 * # Safety
 * `errors` must hold `cap` writable doubles.
 */
enum DstabStatus dstab_result_copy_trace(const struct DstabResult *result,
                                         double *errors,
                                         size_t cap);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in
 * bytes excluding the terminator; 0 when there is no message.
 *
 * # Safety
 * `buf` must hold `len` writable bytes, or be null with `len == 0`.
 */
size_t dstab_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dstab_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSTAB_H */
