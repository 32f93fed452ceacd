#ifndef NMMO_H
#define NMMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum NmmoStatus {
  NMMO_STATUS_OK = 0,
  NMMO_STATUS_NULL_POINTER = 1,
  NMMO_STATUS_INVALID_ARGUMENT = 2,
  NMMO_STATUS_DIMENSION_MISMATCH = 3,
  NMMO_STATUS_NON_FINITE = 4,
  NMMO_STATUS_NUMERICAL = 5,
  NMMO_STATUS_UNKNOWN_NAME = 6,
  NMMO_STATUS_IO = 7,
  NMMO_STATUS_PANIC = 8,
} NmmoStatus;

/*
 Opaque Pareto front handle.
 */
typedef struct NmmoFront NmmoFront;

/*
 Ask/tell optimizer handle.
 */
typedef struct NmmoOptimizer NmmoOptimizer;

/*
 Numeric run settings.
 */
typedef struct NmmoRunConfig {
  size_t horizon_cap;
  size_t iterations;
  size_t init_points;
  size_t mc_samples;
  size_t grid_size;
  size_t fit_restarts;
  uint64_t seed;
} NmmoRunConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call into the library from the same thread.
 */
const char *nmmo_last_error(void);

/*
 Library version string (static storage).
 */
const char *nmmo_version(void);

/*
 Creates an empty front with `k` objectives and the given reference point.

 # Safety
 `reference` must point to `k` doubles; `out` must be writable.
 */
enum NmmoStatus nmmo_front_new(const double *reference, size_t k, struct NmmoFront **out_front);

/*
 Releases a front. Null is ignored.

 # Safety
 `front` must come from [`nmmo_front_new`] and not be used afterwards.
 */
void nmmo_front_free(struct NmmoFront *front);

/*
 Adds a point. `inserted` (optional) receives 1 when the front changed.

 # Safety
 `front` must be a live handle and `y` must point to `k` doubles.
 */
enum NmmoStatus nmmo_front_insert(struct NmmoFront *front,
                                  const double *y,
                                  size_t k,
                                  int32_t *inserted);

/*
 Number of stored points.

 # Safety
 `front` must be a live handle; `out_len` must be writable.
 */
enum NmmoStatus nmmo_front_len(const struct NmmoFront *front, size_t *out_len);

/*
 Dominated hypervolume with respect to the reference point.

 # Safety
 `front` must be a live handle; `out_hv` must be writable.
 */
enum NmmoStatus nmmo_front_hypervolume(const struct NmmoFront *front, double *out_hv);

/*
 Hypervolume improvement of `y` without modifying the front.

 # Safety
 `front` must be a live handle, `y` must point to `k` doubles and
 `out_hvi` must be writable.
 */
enum NmmoStatus nmmo_front_hvi(const struct NmmoFront *front,
                               const double *y,
                               size_t k,
                               double *out_hvi);

/*
 Input dimension and objective count of a named benchmark.

 # Safety
 `name` must be a NUL-terminated string; outputs must be writable.
 */
enum NmmoStatus nmmo_problem_info(const char *name, size_t *out_d, size_t *out_k);

/*
 Reference point in maximization convention.

 # Safety
 `out_ref` must point to `k` writable doubles.
 */
enum NmmoStatus nmmo_problem_reference(const char *name, double *out_ref, size_t k);

/*
 Evaluates a benchmark at a unit-cube input.

 # Safety
 `x` must point to `d` doubles and `out_y` to `k` writable doubles.
 */
enum NmmoStatus nmmo_problem_evaluate(const char *name,
                                      const double *x,
                                      size_t d,
                                      double *out_y,
                                      size_t k);

/*
 Default settings.
 */
struct NmmoRunConfig nmmo_run_config_default(void);

/*
 Creates an optimizer for a named problem. The first `init_points`
 suggestions are the initial Sobol design.

 # Safety
 `problem` and `method` must be NUL-terminated strings, `config` may be
 null (defaults) and `out_opt` must be writable.
 */
enum NmmoStatus nmmo_optimizer_new(const char *problem,
                                   const char *method,
                                   const struct NmmoRunConfig *config,
                                   struct NmmoOptimizer **out_opt);

/*
 Releases an optimizer. Null is ignored.

 # Safety
 `opt` must come from [`nmmo_optimizer_new`] and not be used afterwards.
 */
void nmmo_optimizer_free(struct NmmoOptimizer *opt);

/*
 Writes the next input to evaluate into `out_x` (`d` doubles). Calling it
 repeatedly without a tell returns the same point.

 # Safety
 `opt` must be a live handle and `out_x` must point to `d` writable doubles.
 */
enum NmmoStatus nmmo_optimizer_ask(struct NmmoOptimizer *opt, double *out_x, size_t d);

/*
 Records an observation (maximization convention) at `x`.

 # Safety
 `opt` must be a live handle; `x` and `y` must point to `d` and `k` doubles.
 */
enum NmmoStatus nmmo_optimizer_tell(struct NmmoOptimizer *opt,
                                    const double *x,
                                    size_t d,
                                    const double *y,
                                    size_t k);

/*
 Current hypervolume of the observed outputs.

 # Safety
 `opt` must be a live handle; `out_hv` must be writable.
 */
enum NmmoStatus nmmo_optimizer_hypervolume(const struct NmmoOptimizer *opt, double *out_hv);

/*
 Runs a complete optimization on a benchmark and writes the hypervolume
 after each of the `config.iterations` steps into `out_hv`.

 # Safety
 `problem`, `method` must be NUL-terminated strings; `config` may be null;
 `out_hv` must point to `n` writable doubles with `n == iterations`.
 */
enum NmmoStatus nmmo_run_bo(const char *problem,
                            const char *method,
                            const struct NmmoRunConfig *config,
                            double *out_hv,
                            size_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NMMO_H */
