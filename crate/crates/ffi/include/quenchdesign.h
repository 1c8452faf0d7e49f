#ifndef QUENCHDESIGN_H
#define QUENCHDESIGN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum qd_status {
  QD_STATUS_OK = 0,
  QD_STATUS_NULL_POINTER = 1,
  QD_STATUS_INVALID_ARGUMENT = 2,
  QD_STATUS_INVALID_UTF8 = 3,
  QD_STATUS_CONFIG = 4,
  QD_STATUS_NUMERICAL = 5,
  QD_STATUS_ESTIMATOR_UNDEFINED = 6,
  QD_STATUS_DEGENERATE = 7,
  QD_STATUS_UNIMPLEMENTED = 8,
  QD_STATUS_IO = 9,
  QD_STATUS_PANIC = 10,
} qd_status;

/**
 * Sweep selector for [`qd_experiment_run`].
 */
typedef enum qd_sweep {
  QD_SWEEP_CONVERGE = 0,
  QD_SWEEP_ERRORS = 1,
  QD_SWEEP_IMPERFECT = 2,
  QD_SWEEP_CHAOS = 3,
} qd_sweep;

/**
 * Parsed and validated experiment configuration.
 */
typedef struct qd_experiment qd_experiment;

/**
 * Seeded random number generator.
 */
typedef struct qd_rng qd_rng;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *qd_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *qd_version(void);

/**
 * Create a generator seeded with `seed`.
 */
struct qd_rng *qd_rng_new(uint64_t seed);

/**
 * # Safety
 * `rng` must be null or a handle from [`qd_rng_new`] not yet freed.
 */
void qd_rng_free(struct qd_rng *rng);

/**
 * Draw a Haar-random `dim × dim` unitary into `re` and `im`, each of length
 * `dim * dim`, column-major.
 *
 * # Safety
 * `rng` must be a live handle; `re` and `im` must be writable for `dim * dim` doubles.
 */
enum qd_status qd_sample_cue(struct qd_rng *rng, size_t dim, double *re, double *im);

/**
 * Unbiased estimate of `P^n` from `b` hits in `n_m` shots.
 *
 * # Safety
 * `out` must be writable.
 */
enum qd_status qd_falling_factorial_estimator(uint64_t b, uint64_t n_m, uint32_t n, double *out);

/**
 * Recover `Tr ρ` and `Tr ρ²` from the first two moments of an outcome of
 * weight `w` in a block of dimension `dim`.
 *
 * # Safety
 * `tr1` and `tr2` must be writable.
 */
enum qd_status qd_invert_second_moment(double m1,
                                       double m2,
                                       size_t w,
                                       size_t dim,
                                       double *tr1,
                                       double *tr2);

/**
 * Recover `Tr ρ^n` from the `n`-th moment of a single-state outcome and the
 * lower traces `Tr ρ, ..., Tr ρ^{n-1}`.
 *
 * # Safety
 * `lower` must hold `lower_len` doubles; `out` must be writable.
 */
enum qd_status qd_invert_higher_moment(uint32_t n,
                                       double moment,
                                       const double *lower,
                                       size_t lower_len,
                                       size_t dim,
                                       double *out);

/**
 * Planning-formula error of `p_n`; `n_m = 0` means infinitely many shots.
 *
 * # Safety
 * `out` must be writable.
 */
enum qd_status qd_predicted_error(uint32_t n,
                                  size_t n_u,
                                  uint64_t n_m,
                                  size_t dim,
                                  double p_guess,
                                  double *out);

/**
 * Undo the purity loss from per-site misread probability `p` on `sites` sites.
 *
 * # Safety
 * `out` must be writable.
 */
enum qd_status qd_fidelity_correct(double p2, double p, size_t sites, double *out);

/**
 * Mean consecutive gap ratio of eigenphases on the unit circle.
 *
 * # Safety
 * `phases` must hold `len` doubles; `out` must be writable.
 */
enum qd_status qd_mean_gap_ratio(const double *phases, size_t len, double *out);

/**
 * IPR of a Haar-random unitary given the spectrum of the state.
 *
 * # Safety
 * `eigenvalues` must hold `len` doubles; `out` must be writable.
 */
enum qd_status qd_ipr_cue_reference(const double *eigenvalues, size_t len, double *out);

/**
 * Parse and validate a TOML experiment description.
 *
 * # Safety
 * `toml` must be a nul-terminated string; `out` must be writable.
 */
enum qd_status qd_experiment_from_toml(const char *toml, struct qd_experiment **out);

/**
 * # Safety
 * `exp` must be null or a handle from [`qd_experiment_from_toml`] not yet freed.
 */
void qd_experiment_free(struct qd_experiment *exp);

/**
 * Replace the master seed.
 *
 * # Safety
 * `exp` must be a live handle.
 */
enum qd_status qd_experiment_set_seed(struct qd_experiment *exp, uint64_t seed);

/**
 * Run a sweep and return its CSV text in `out_csv`; free it with
 * [`qd_string_free`].
 *
 * # Safety
 * `exp` must be a live handle; `out_csv` must be writable.
 */
enum qd_status qd_experiment_run(const struct qd_experiment *exp,
                                 enum qd_sweep sweep,
                                 char **out_csv);

/**
 * Hex SHA-256 of the configuration; free with [`qd_string_free`].
 *
 * # Safety
 * `exp` must be a live handle.
 */
char *qd_experiment_hash(const struct qd_experiment *exp);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void qd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUENCHDESIGN_H */
