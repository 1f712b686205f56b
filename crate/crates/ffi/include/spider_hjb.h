#ifndef SPIDER_HJB_H
#define SPIDER_HJB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum SpiderStatus {
  SPIDER_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SPIDER_STATUS_NULL_POINTER = 1,
  /**
   * Configuration or problem-data error.
   */
  SPIDER_STATUS_CONFIG = 2,
  /**
   * Numerical failure inside the solver or simulator.
   */
  SPIDER_STATUS_NUMERICAL = 3,
  /**
   * Query outside the grid or network domain.
   */
  SPIDER_STATUS_OUT_OF_DOMAIN = 4,
  /**
   * Invalid argument value.
   */
  SPIDER_STATUS_INVALID_ARGUMENT = 5,
  SPIDER_STATUS_IO = 6,
  /**
   * A string argument was not valid UTF-8.
   */
  SPIDER_STATUS_UTF8 = 7,
  /**
   * Internal panic caught at the boundary.
   */
  SPIDER_STATUS_PANIC = 8,
} SpiderStatus;

/**
 * Problem data, control sets and grid built from a TOML run configuration.
 */
typedef struct SpiderProblem SpiderProblem;

/**
 * Solved value field together with its feedback policy.
 */
typedef struct SpiderSolution SpiderSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *spider_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spider_version(void);

/**
 * Parses a TOML run configuration and builds the problem.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpiderStatus spider_problem_from_toml(const char *toml, struct SpiderProblem **out);

/**
 * Number of rays of the problem.
 *
 * # Safety
 * `problem` must come from [`spider_problem_from_toml`]; `out` must be valid.
 */
enum SpiderStatus spider_problem_ray_count(const struct SpiderProblem *problem, uintptr_t *out);

/**
 * # Safety
 * `problem` must be null or come from [`spider_problem_from_toml`] and not
 * have been freed.
 */
void spider_problem_free(struct SpiderProblem *problem);

/**
 * Solves the HJB system on the configured grid.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum SpiderStatus spider_solve(const struct SpiderProblem *problem, struct SpiderSolution **out);

/**
 * Interpolated value `u(t, x, ray, l)`; `ray` is one-based.
 *
 * # Safety
 * `solution` must be a live handle and `out` a valid pointer.
 */
enum SpiderStatus spider_solution_eval(const struct SpiderSolution *solution,
                                       double t,
                                       double x,
                                       uintptr_t ray,
                                       double l,
                                       double *out);

/**
 * Writes the value field and policy as CSV, without a timestamp line.
 *
 * # Safety
 * `solution` must be a live handle and `path` a NUL-terminated string.
 */
enum SpiderStatus spider_solution_write_csv(const struct SpiderSolution *solution,
                                            const char *path);

/**
 * # Safety
 * `solution` must be null or a live handle from [`spider_solve`].
 */
void spider_solution_free(struct SpiderSolution *solution);

/**
 * Monte Carlo estimate of the reward from `(t, x, ray, l)`. With a null
 * `solution` the process is uncontrolled (`beta = 0`, uniform vertex
 * weights); otherwise the solution's feedback policy is used.
 *
 * # Safety
 * `problem` must be a live handle, `solution` null or a live handle of the
 * same problem, and `mean`, `std_error` valid pointers.
 */
enum SpiderStatus spider_estimate_value(const struct SpiderProblem *problem,
                                        const struct SpiderSolution *solution,
                                        double t,
                                        double x,
                                        uintptr_t ray,
                                        double l,
                                        double dt,
                                        uintptr_t n_paths,
                                        uint64_t seed,
                                        double *mean,
                                        double *std_error);

/**
 * `E|x + sigma W_s|` and the mean local time of the reflected motion.
 *
 * # Safety
 * `mean` and `local_time` must be valid pointers.
 */
enum SpiderStatus spider_reflected_bm_oracle(double x,
                                             double s,
                                             double sigma,
                                             double *mean,
                                             double *local_time);

/**
 * Geodesic distance between `(x1, ray1)` and `(x2, ray2)` on a star with
 * `ray_count` rays.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SpiderStatus spider_distance(double x1,
                                  uintptr_t ray1,
                                  double x2,
                                  uintptr_t ray2,
                                  uintptr_t ray_count,
                                  double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SPIDER_HJB_H */
