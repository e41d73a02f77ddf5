#ifndef THZCOV_H
#define THZCOV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ThzStatus {
  THZ_STATUS_OK = 0,
  THZ_STATUS_NULL_POINTER = 1,
  THZ_STATUS_INVALID_ARGUMENT = 2,
  THZ_STATUS_NUMERICAL_FAILURE = 3,
  THZ_STATUS_PANIC = 4,
} ThzStatus;

typedef enum ThzMomentMode {
  THZ_MOMENT_MODE_CORRECTED = 0,
  THZ_MOMENT_MODE_PAPER = 1,
} ThzMomentMode;

/*
 Opaque validated scenario.
 */
typedef struct ThzScenario ThzScenario;

/*
 Plain description of a scenario.
 */
typedef struct ThzScenarioParams {
  double p_tx_w;
  double freq_hz;
  /*
   Molecular absorption coefficient, 1/m.
   */
  double absorption;
  double pathloss_exp;
  /*
   BSs per square metre.
   */
  double bs_density;
  /*
   Blockage rate, 1/m.
   */
  double blockage_rate;
  double fading_shape;
  double fading_scale;
  double noise_w;
  uint32_t n_b;
  uint32_t n_u;
  double sigma_b_rad;
  double sigma_u_rad;
  /*
   Clustering parameter in (0, 1].
   */
  double delta;
} ThzScenarioParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failure on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *thz_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *thz_version(void);

/*
 Fills `out` with the default scenario (30 dBm, 1 THz, 8x8 arrays,
 10 degree misalignment, delta 0.6).

 # Safety
 `out` must be null or valid for writes.
 */
enum ThzStatus thz_scenario_params_default(struct ThzScenarioParams *out);

/*
 Validates `params` and allocates a scenario. Release it with
 [`thz_scenario_free`].

 # Safety
 `params` must be null or point to a valid struct; `out` must be null or
 valid for writes.
 */
enum ThzStatus thz_scenario_new(const struct ThzScenarioParams *params, struct ThzScenario **out);

/*
 Releases a scenario; null is ignored.

 # Safety
 `s` must be null or a handle from [`thz_scenario_new`] not yet freed.
 */
void thz_scenario_free(struct ThzScenario *s);

/*
 Analytic coverage probability at the linear SINR threshold.

 # Safety
 `s` must be null or a live handle; `out` must be null or valid for writes.
 */
enum ThzStatus thz_coverage_analytic(const struct ThzScenario *s,
                                     double sinr_threshold,
                                     enum ThzMomentMode mode,
                                     double *out);

/*
 Monte Carlo coverage estimate and its standard error.

 # Safety
 `s` must be null or a live handle; the out-pointers must be null or
 valid for writes. `out_stderr` may be null if not wanted.
 */
enum ThzStatus thz_coverage_monte_carlo(const struct ThzScenario *s,
                                        double sinr_threshold,
                                        uint64_t n_trials,
                                        uint64_t seed,
                                        double *out_probability,
                                        double *out_stderr);

/*
 Mean and variance of the interference beyond `radius` metres.

 # Safety
 `s` must be null or a live handle; the out-pointers must be null or
 valid for writes.
 */
enum ThzStatus thz_interference_moments(const struct ThzScenario *s,
                                        double radius,
                                        enum ThzMomentMode mode,
                                        double *out_mean,
                                        double *out_variance);

/*
 Principal-branch Lambert W.

 # Safety
 `out` must be null or valid for writes.
 */
enum ThzStatus thz_lambert_w0(double x, double *out);

/*
 Upper incomplete gamma `Gamma(a, x)` for any real `a` and `x > 0`.

 # Safety
 `out` must be null or valid for writes.
 */
enum ThzStatus thz_upper_incomplete_gamma(double a, double x, double *out);

/*
 Gaussian tail probability `Q(z)`.
 */
double thz_q_function(double z);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THZCOV_H */
