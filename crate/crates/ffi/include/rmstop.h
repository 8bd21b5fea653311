#ifndef RMSTOP_H
#define RMSTOP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  RM_STATUS_OK = 0,
  RM_STATUS_NULL_POINTER = 1,
  /**
   * An argument is outside the function's domain.
   */
  RM_STATUS_DOMAIN = 2,
  /**
   * A configuration is inconsistent.
   */
  RM_STATUS_CONFIG = 3,
  /**
   * A numerical routine did not converge.
   */
  RM_STATUS_NUMERIC = 4,
  /**
   * A call does not fit the object's state, e.g. out-of-order steps.
   */
  RM_STATUS_ARGUMENT = 5,
  RM_STATUS_CALIBRATION = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  RM_STATUS_PANIC = 7,
} RmStatus;

typedef enum {
  RM_TARGET_RUNNING_MEAN = 0,
  RM_TARGET_JEFFREYS_MEAN = 1,
} RmTarget;

typedef enum {
  RM_RULE_BOUNDARY_ONLY = 0,
  RM_RULE_TWO_COND = 1,
  RM_RULE_RM = 2,
} RmRule;

typedef enum {
  RM_CUSUM_KIND_NORMAL = 0,
  RM_CUSUM_KIND_POISSON = 1,
} RmCusumKind;

/**
 * One-sided CUSUM chart.
 */
typedef struct RmCusum RmCusum;

/**
 * Wald sequential probability ratio test.
 */
typedef struct RmSprt RmSprt;

/**
 * Streaming scorecard rule tracker.
 */
typedef struct RmTracker RmTracker;

/**
 * Tuning of the three scorecard rules. Set `eta` to infinity to disable
 * the stability screen.
 */
typedef struct {
  double epsilon;
  double width_max;
  double eta;
  uint64_t n_min;
  uint64_t n_max;
  double alpha;
} RmScorecardConfig;

/**
 * Conditions that held at the latest step.
 */
typedef struct {
  bool boundary_only;
  bool two_cond;
  bool rm;
} RmFiring;

/**
 * `tau` and `m_at_tau` are meaningful only when `stopped` is true;
 * otherwise they are 0 and NaN.
 */
typedef struct {
  bool stopped;
  uint64_t tau;
  double m_at_tau;
} RmStopReport;

/**
 * CUSUM chart: `k` is used by the normal chart, the rates by the Poisson chart.
 */
typedef struct {
  RmCusumKind kind;
  double k;
  double lambda0;
  double lambda1;
} RmCusumSpec;

typedef struct {
  double h;
  double arl0;
  /**
   * False when the estimate could not be brought within tolerance and `h`
   * is the smallest threshold reaching the target.
   */
  bool within_tolerance;
} RmCalibration;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *rm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rm_version(void);

/**
 * Smallest all-failure run length whose one-sided bound falls to `epsilon`.
 */
RmStatus rm_all_failure_threshold(double alpha, double epsilon, uint64_t *out);

RmStatus rm_clopper_pearson_upper_zero(uint64_t n, double alpha, double *out);

/**
 * Equal-tailed Jeffreys interval for a Bernoulli probability after `s` successes in `n` trials.
 */
RmStatus rm_jeffreys_beta_interval(uint64_t s,
                                   uint64_t n,
                                   double alpha,
                                   double *lower,
                                   double *upper);

/**
 * Equal-tailed Jeffreys interval for a Poisson rate after `s` events in `n` periods.
 */
RmStatus rm_jeffreys_gamma_interval(uint64_t s,
                                    uint64_t n,
                                    double alpha,
                                    double *lower,
                                    double *upper);

/**
 * `E[M_n | S_(n+1) = s_next] - M_(n+1)` for a Bernoulli target.
 */
RmStatus rm_exact_reverse_defect(RmTarget target, uint64_t s_next, uint64_t n, double *out);

RmStatus rm_tracker_new(const RmScorecardConfig *config, RmTracker **out);

/**
 * Feeds the next step. `b` is the distance of `m` from the boundary, `width`
 * the uncertainty width and `r` the stability defect (infinity when undefined).
 */
RmStatus rm_tracker_observe(RmTracker *tracker,
                            double m,
                            double b,
                            double width,
                            double r,
                            RmFiring *firing);

RmStatus rm_tracker_report(const RmTracker *tracker, RmRule rule, RmStopReport *out);

void rm_tracker_free(RmTracker *tracker);

/**
 * Bernoulli SPRT of `p0` against `p1`.
 */
RmStatus rm_sprt_new_bernoulli(double p0, double p1, double alpha, double beta, RmSprt **out);

/**
 * Poisson SPRT of rate `lambda0` against `lambda1`.
 */
RmStatus rm_sprt_new_poisson(double lambda0,
                             double lambda1,
                             double alpha,
                             double beta,
                             RmSprt **out);

/**
 * Feeds one observation; `decided` becomes true once either hypothesis is accepted.
 */
RmStatus rm_sprt_update(RmSprt *sprt, uint64_t x, bool *decided);

/**
 * Acceptance of the alternative counts as the stop; acceptance of the null
 * and an undecided test both report `stopped = false`.
 */
RmStatus rm_sprt_report(const RmSprt *sprt, RmStopReport *out);

void rm_sprt_free(RmSprt *sprt);

RmStatus rm_cusum_new(const RmCusumSpec *spec, double h, RmCusum **out);

/**
 * Feeds one observation; `alarm` reports whether the chart has signalled.
 */
RmStatus rm_cusum_update(RmCusum *cusum, double x, bool *alarm);

RmStatus rm_cusum_statistic(const RmCusum *cusum, double *out);

void rm_cusum_free(RmCusum *cusum);

/**
 * Calibrates the CUSUM threshold to an in-control average run length by
 * Monte Carlo with `runs` simulated charts. Deterministic given `seed`.
 */
RmStatus rm_calibrate_cusum(const RmCusumSpec *spec,
                            double target_arl0,
                            uint64_t runs,
                            uint64_t seed,
                            RmCalibration *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RMSTOP_H */
