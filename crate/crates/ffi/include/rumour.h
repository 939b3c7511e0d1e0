#ifndef RUMOUR_H
#define RUMOUR_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RumourStatus {
  RUMOUR_STATUS_OK = 0,
  RUMOUR_STATUS_NULL_POINTER = 1,
  RUMOUR_STATUS_INVALID_ARGUMENT = 2,
  RUMOUR_STATUS_INVALID_LAW = 3,
  RUMOUR_STATUS_INVALID_UTF8 = 4,
  RUMOUR_STATUS_BUDGET_EXCEEDED = 5,
  RUMOUR_STATUS_NO_RENEWALS_FOUND = 6,
  RUMOUR_STATUS_MOMENT_TOO_LOW = 7,
  RUMOUR_STATUS_INCONCLUSIVE = 8,
  RUMOUR_STATUS_CONFIG = 9,
  RUMOUR_STATUS_INVARIANT_VIOLATION = 10,
  RUMOUR_STATUS_IO = 11,
  RUMOUR_STATUS_PANIC = 12,
} RumourStatus;

typedef enum RumourVerdict {
  RUMOUR_VERDICT_NO_PERCOLATION = 0,
  RUMOUR_VERDICT_PERCOLATES_WITH_POSITIVE_PROB = 1,
  RUMOUR_VERDICT_INCONCLUSIVE = 2,
} RumourVerdict;

/**
 * A radius law.
 */
typedef struct RumourLaw RumourLaw;

/**
 * A reactivation-model run.
 */
typedef struct RumourReactSim RumourReactSim;

/**
 * A basic-model run with its own random field and site environment.
 */
typedef struct RumourSim RumourSim;

/**
 * Snapshot of a process after some number of steps.
 */
typedef struct RumourFront {
  uint64_t n;
  int64_t l;
  int64_t r;
  uint64_t active_count;
  bool extinct;
} RumourFront;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rumour_version(void);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *rumour_last_error(void);

/**
 * Static description of a status code.
 */
const char *rumour_status_name(enum RumourStatus status);

/**
 * `I = c` almost surely.
 */
enum RumourStatus rumour_law_constant(uint64_t c, struct RumourLaw **out);

/**
 * Geometric on `{0, 1, ...}` with `P(I = k) = (1 - q) q^k`.
 */
enum RumourStatus rumour_law_geometric(double q, struct RumourLaw **out);

/**
 * Geometric on `{1, 2, ...}`.
 */
enum RumourStatus rumour_law_geometric_min1(double q, struct RumourLaw **out);

/**
 * `P(I > i) = c (i + 1)^(-alpha)`.
 */
enum RumourStatus rumour_law_polynomial_tail(double alpha, double c, struct RumourLaw **out);

/**
 * Finite law from `len` probabilities for radii `0..len`.
 *
 * # Safety
 * `pmf` must point to `len` readable doubles.
 */
enum RumourStatus rumour_law_finite(const double *pmf, size_t len, struct RumourLaw **out);

/**
 * Law from its JSON form, e.g. `{"kind":"geometric","q":0.5}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string.
 */
enum RumourStatus rumour_law_from_json(const char *json, struct RumourLaw **out);

/**
 * # Safety
 * `law` must come from a `rumour_law_*` constructor and not be used again.
 */
void rumour_law_free(struct RumourLaw *law);

/**
 * `P(I <= i)`.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RumourStatus rumour_law_cdf(const struct RumourLaw *law, int64_t i, double *out);

/**
 * `a_n = prod_{i=0}^{n} P(I <= i)`.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RumourStatus rumour_law_a_n(const struct RumourLaw *law, uint64_t n, double *out);

/**
 * Percolation verdict from the `a_n` series.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RumourStatus rumour_law_criterion(const struct RumourLaw *law,
                                       int64_t nmax,
                                       double tol,
                                       enum RumourVerdict *out);

/**
 * `P(O <= m)` for the overshoot `O`, with a certified error bound. `eps`
 * bounds the truncation error for unbounded laws.
 *
 * # Safety
 * `law` must be a live handle; `value` and `error_bound` writable.
 */
enum RumourStatus rumour_law_overshoot_cdf(const struct RumourLaw *law,
                                           uint64_t m,
                                           double eps,
                                           double *value,
                                           double *error_bound);

/**
 * Exact `P(τ = k)` by enumeration up to `horizon` steps.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RumourStatus rumour_oracle_tau_prob(const struct RumourLaw *law,
                                         uint64_t horizon,
                                         uint64_t k,
                                         double *out);

/**
 * New basic-model run from `{0}`. `p_occ` below 1 makes each vertex other
 * than the origin occupied with that probability.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RumourStatus rumour_sim_new(const struct RumourLaw *law,
                                 uint64_t seed,
                                 double p_occ,
                                 struct RumourSim **out);

/**
 * # Safety
 * `sim` must come from [`rumour_sim_new`] and not be used again.
 */
void rumour_sim_free(struct RumourSim *sim);

/**
 * Current state.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum RumourStatus rumour_sim_state(const struct RumourSim *sim, struct RumourFront *out);

/**
 * Advances up to `steps` steps, stopping early at extinction, and writes the
 * resulting state.
 *
 * # Safety
 * `sim` must be a live handle; `out` may be null.
 */
enum RumourStatus rumour_sim_advance(struct RumourSim *sim,
                                     uint64_t steps,
                                     struct RumourFront *out);

/**
 * New reactivation run from `{0}`. `window` 0 tracks every informed vertex;
 * a positive value only consults clocks within that distance of a front.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RumourStatus rumour_react_new(const struct RumourLaw *law,
                                   double p2,
                                   uint64_t seed,
                                   uint64_t window,
                                   struct RumourReactSim **out);

/**
 * # Safety
 * `sim` must come from [`rumour_react_new`] and not be used again.
 */
void rumour_react_free(struct RumourReactSim *sim);

/**
 * Advances exactly `steps` steps and writes the resulting state.
 *
 * # Safety
 * `sim` must be a live handle; `out` may be null.
 */
enum RumourStatus rumour_react_advance(struct RumourReactSim *sim,
                                       uint64_t steps,
                                       struct RumourFront *out);

/**
 * Parses a TOML experiment config and writes its artifacts to `out_dir`
 * using `workers` threads.
 *
 * # Safety
 * `config` and `out_dir` must be NUL-terminated strings.
 */
enum RumourStatus rumour_run_config(const char *config, const char *out_dir, size_t workers);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RUMOUR_H */
