#ifndef RDUTEST_H
#define RDUTEST_H

/* Generated by cbindgen from rdutest-ffi; regenerate with a build, do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of an interface call. Mirrors the command-line exit codes for
 * input and solver failures.
 */
enum RduStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  RDU_STATUS_OK = 0,
  RDU_STATUS_NULL_ARGUMENT = 1,
  RDU_STATUS_INPUT = 2,
  RDU_STATUS_SOLVER = 3,
  RDU_STATUS_INVALID_UTF8 = 4,
  RDU_STATUS_PANIC = 5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum RduStatus RduStatus;
#else
typedef int32_t RduStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * A finished test run. Opaque; read it through the `rdutest_result_*`
 * getters and release it with [`rdutest_result_free`].
 */
typedef struct RduResult RduResult;

/**
 * Overrides applied on top of the config's `[test]` section. Zero-valued
 * fields keep the config's setting; see the per-field comments.
 */
typedef struct {
  /**
   * 0 keeps the config model, 1 forces EU, 2 forces RDEU.
   */
  int32_t model;
  /**
   * Tri-state: 0 keeps the config, positive forces the restriction on,
   * negative forces it off.
   */
  int32_t monotone;
  /**
   * Tri-state, as for `monotone`.
   */
  int32_t convex;
  /**
   * Feasibility margin; kept when not finite and positive.
   */
  double eps;
  /**
   * Restarts of the feasibility search per order; 0 keeps the config.
   */
  uint32_t restarts;
  /**
   * Bootstrap replications; 0 keeps the config.
   */
  uint32_t bootstrap;
  /**
   * Master seed, read only when `has_seed` is nonzero.
   */
  uint64_t seed;
  int32_t has_seed;
  /**
   * Optional test levels in (0, 1/2); NULL or count 0 keeps the config.
   */
  const double *alphas;
  size_t alpha_count;
} RduOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The error message of the most recent failed call on this thread, empty
 * when the last call succeeded. The pointer is invalidated by the next
 * interface call on the same thread.
 */
const char *rdutest_last_error(void);

/**
 * Library version as a static NUL-terminated string; never freed.
 */
const char *rdutest_version(void);

/**
 * Options that keep every config setting unchanged.
 */
RduOptions rdutest_options_default(void);

/**
 * Runs the cone test on `config_path` (dataset TOML) and `data_path`
 * (choice CSV). `options` may be NULL for config defaults. On success
 * writes a fresh handle to `*out_result` and returns `Ok`; on failure
 * leaves `*out_result` NULL and records a message for
 * [`rdutest_last_error`].
 *
 * # Safety
 * `config_path` and `data_path` must be NUL-terminated strings; `options`,
 * when non-NULL, must point to a valid [`RduOptions`] whose `alphas` array
 * holds `alpha_count` doubles; `out_result` must be a valid pointer.
 */
RduStatus rdutest_run(const char *config_path,
                      const char *data_path,
                      const RduOptions *options,
                      RduResult **out_result);

/**
 * Test statistic T_n; NaN on a NULL handle.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
double rdutest_result_t_n(const RduResult *handle);

/**
 * Bootstrap p-value; NaN on a NULL handle.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
double rdutest_result_p_value(const RduResult *handle);

/**
 * Tightening parameter tau_n; NaN on a NULL handle.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
double rdutest_result_tau_n(const RduResult *handle);

/**
 * Total observations across menus; 0 on a NULL handle.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
uint64_t rdutest_result_sample_size(const RduResult *handle);

/**
 * Number of rationalizable orders in the cone; 0 on a NULL handle.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
size_t rdutest_result_order_count(const RduResult *handle);

/**
 * Number of test levels the run evaluated; 0 on a NULL handle.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
size_t rdutest_result_alpha_count(const RduResult *handle);

/**
 * The i-th test level; NaN when the handle is NULL or `index` is out of
 * range.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
double rdutest_result_alpha(const RduResult *handle, size_t index);

/**
 * The i-th bootstrap critical value; NaN when the handle is NULL or
 * `index` is out of range.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
double rdutest_result_critical_value(const RduResult *handle, size_t index);

/**
 * Rejection decision at the i-th test level: 1 reject, 0 fail to reject,
 * -1 when the handle is NULL or `index` is out of range.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
int32_t rdutest_result_reject(const RduResult *handle, size_t index);

/**
 * The full report as a JSON document. The returned string belongs to the
 * caller; release it with [`rdutest_string_free`]. NULL on failure.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`].
 */
char *rdutest_result_report_json(const RduResult *handle);

/**
 * Releases a string obtained from this interface. NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a pointer returned by [`rdutest_result_report_json`],
 * released at most once.
 */
void rdutest_string_free(char *s);

/**
 * Releases a result handle. NULL is ignored.
 *
 * # Safety
 * `handle` must be NULL or a pointer from [`rdutest_run`], released at most
 * once.
 */
void rdutest_result_free(RduResult *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RDUTEST_H */
