#ifndef ROBINV_H
#define ROBINV_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RobinvStatus {
  ROBINV_STATUS_OK = 0,
  ROBINV_STATUS_NULL_POINTER = 1,
  ROBINV_STATUS_INVALID_INPUT = 2,
  ROBINV_STATUS_SOLVER_FAILURE = 3,
  ROBINV_STATUS_BUFFER_TOO_SMALL = 4,
  ROBINV_STATUS_PANIC = 5,
} RobinvStatus;

typedef enum RobinvExposure {
  ROBINV_EXPOSURE_FULL = 0,
  ROBINV_EXPOSURE_ORTHANT = 1,
  ROBINV_EXPOSURE_BOX = 2,
} RobinvExposure;

typedef enum RobinvCurve {
  ROBINV_CURVE_TIME = 0,
  ROBINV_CURVE_ROBUST = 1,
  ROBINV_CURVE_NEUTRAL = 2,
  ROBINV_CURVE_IGNORANT = 3,
} RobinvCurve;

typedef struct RobinvCurves RobinvCurves;

typedef struct RobinvProblem RobinvProblem;

/**
 * Market and preference inputs. `drift` has `assets` entries, `volatility`
 * is row-major `assets × factors`, `eta` has `factors` entries.
 */
typedef struct RobinvMarket {
  size_t assets;
  size_t factors;
  double horizon;
  double rate;
  double discount;
  const double *drift;
  const double *volatility;
  double risk_aversion;
  double bequest_weight;
  double initial_wealth;
  const double *eta;
} RobinvMarket;

/**
 * Exposure set and consumption band. Box bounds (length `factors`) are read
 * only for `Box`; an infinite `consumption_ceiling` means no ceiling.
 */
typedef struct RobinvConstraints {
  enum RobinvExposure exposure;
  const double *box_lower;
  const double *box_upper;
  double consumption_floor;
  double consumption_ceiling;
} RobinvConstraints;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *robinv_last_error(void);

/**
 * Builds and validates a problem.
 *
 * # Safety
 * `market` and `constraints` must point to valid structs whose array
 * pointers hold the documented number of doubles; `out` must be writable.
 */
enum RobinvStatus robinv_problem_new(const struct RobinvMarket *market,
                                     const struct RobinvConstraints *constraints,
                                     struct RobinvProblem **out);

/**
 * # Safety
 * `problem` must come from [`robinv_problem_new`] and not be freed twice.
 */
void robinv_problem_free(struct RobinvProblem *problem);

/**
 * Writes the `factors` entries of the market price of risk.
 *
 * # Safety
 * `problem` must be a live handle and `out` must hold `len` doubles.
 */
enum RobinvStatus robinv_market_price_of_risk(const struct RobinvProblem *problem,
                                              double *out,
                                              size_t len);

/**
 * Solves the three value curves on `steps` uniform steps.
 *
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
enum RobinvStatus robinv_solve(const struct RobinvProblem *problem,
                               size_t steps,
                               struct RobinvCurves **out);

/**
 * Number of grid nodes (`steps + 1`), or 0 for a null handle.
 *
 * # Safety
 * `curves` must be a live handle or null.
 */
size_t robinv_curves_len(const struct RobinvCurves *curves);

/**
 * Copies one curve (or the time nodes) into `out`.
 *
 * # Safety
 * `curves` must be a live handle and `out` must hold `len` doubles.
 */
enum RobinvStatus robinv_curves_copy(const struct RobinvCurves *curves,
                                     enum RobinvCurve which,
                                     double *out,
                                     size_t len);

/**
 * # Safety
 * `curves` must come from [`robinv_solve`] and not be freed twice.
 */
void robinv_curves_free(struct RobinvCurves *curves);

/**
 * Robust optimal exposure at value level `y` (deterministic case).
 *
 * # Safety
 * `problem` must be a live handle and `out` must hold `len` doubles.
 */
enum RobinvStatus robinv_optimal_exposure(const struct RobinvProblem *problem,
                                          double y,
                                          double *out,
                                          size_t len);

/**
 * Worst-case distortion at value level `y` (deterministic case).
 *
 * # Safety
 * `problem` must be a live handle and `out` must hold `len` doubles.
 */
enum RobinvStatus robinv_optimal_distortion(const struct RobinvProblem *problem,
                                            double y,
                                            double *out,
                                            size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBINV_H */
