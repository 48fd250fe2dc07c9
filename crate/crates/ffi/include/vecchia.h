#ifndef VECCHIA_FFI_H
#define VECCHIA_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define VECCHIA_METRIC_EUCLIDEAN 0

#define VECCHIA_METRIC_GREAT_CIRCLE 1

#define VECCHIA_ORDERING_RANDOM 0

#define VECCHIA_ORDERING_MORTON 1

#define VECCHIA_KERNEL_MATERN 0

#define VECCHIA_KERNEL_POWEXP 1

/**
 * Result codes.
 */
typedef enum VecchiaStatus {
  VECCHIA_STATUS_OK = 0,
  VECCHIA_STATUS_NULL_POINTER = 1,
  VECCHIA_STATUS_INVALID_ARGUMENT = 2,
  VECCHIA_STATUS_SIZE_ERROR = 3,
  VECCHIA_STATUS_NOT_POSITIVE_DEFINITE = 4,
  /**
   * The parameter point makes a conditioning block unusable.
   */
  VECCHIA_STATUS_INFEASIBLE = 5,
  VECCHIA_STATUS_GUARD_EXCEEDED = 6,
  VECCHIA_STATUS_PARSE_ERROR = 7,
  VECCHIA_STATUS_IO_ERROR = 8,
  /**
   * A panic was caught at the boundary.
   */
  VECCHIA_STATUS_INTERNAL = 99,
} VecchiaStatus;

/**
 * Opaque dataset handle.
 */
typedef struct VecchiaDataset VecchiaDataset;

/**
 * Opaque ordering + neighbor plan handle.
 */
typedef struct VecchiaPlanHandle VecchiaPlanHandle;

/**
 * Kernel family (`VECCHIA_KERNEL_*`) and parameters.
 */
typedef struct VecchiaKernel {
  uint32_t family;
  double sigma2;
  double beta;
  double nu;
} VecchiaKernel;

/**
 * Settings for [`vecchia_estimate`]. `m == 0` selects the exact objective.
 */
typedef struct VecchiaFitOptions {
  size_t m;
  uint32_t ordering;
  uint64_t seed;
  double lower[3];
  double upper[3];
  /**
   * Nonzero entries mark `(sigma2, beta, nu)` as free.
   */
  uint8_t free[3];
  double tol;
  size_t max_evals;
  size_t max_dense_n;
} VecchiaFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *vecchia_last_error(void);

/**
 * Build a dataset from coordinate and value arrays of length `n`.
 *
 * # Safety
 * `x`, `y`, `values` must point to `n` readable doubles; `out` must be
 * writable.
 */
enum VecchiaStatus vecchia_dataset_new(const double *x,
                                       const double *y,
                                       const double *values,
                                       size_t n,
                                       uint32_t metric,
                                       double radius,
                                       struct VecchiaDataset **out);

/**
 * Read an `x,y,value` (or `lon,lat,value` for great-circle) CSV file.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum VecchiaStatus vecchia_dataset_read_csv(const char *path,
                                            uint32_t metric,
                                            double radius,
                                            struct VecchiaDataset **out);

/**
 * # Safety
 * `ds` must come from a dataset constructor and not be used afterwards.
 */
void vecchia_dataset_free(struct VecchiaDataset *ds);

/**
 * Number of locations, or 0 for NULL.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
size_t vecchia_dataset_len(const struct VecchiaDataset *ds);

/**
 * Order `ds` and find each point's `m` nearest predecessors.
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be writable.
 */
enum VecchiaStatus vecchia_plan_new(const struct VecchiaDataset *ds,
                                    size_t m,
                                    uint32_t ordering,
                                    uint64_t seed,
                                    struct VecchiaPlanHandle **out);

/**
 * # Safety
 * `plan` must come from [`vecchia_plan_new`] and not be used afterwards.
 */
void vecchia_plan_free(struct VecchiaPlanHandle *plan);

/**
 * Copy the plan's ordering (new position -> original index) into `out`,
 * which must hold `len` entries with `len` equal to the dataset size.
 *
 * # Safety
 * `plan` must be live; `out` must point to `len` writable `size_t`.
 */
enum VecchiaStatus vecchia_plan_permutation(const struct VecchiaPlanHandle *plan,
                                            size_t *out,
                                            size_t len);

/**
 * Vecchia log-likelihood of `ds` (in its original order) under `plan`.
 *
 * # Safety
 * Handles must be live and `plan` built from `ds`; pointers writable.
 */
enum VecchiaStatus vecchia_loglik(const struct VecchiaDataset *ds,
                                  const struct VecchiaPlanHandle *plan,
                                  const struct VecchiaKernel *kernel,
                                  double *out);

/**
 * Exact dense log-likelihood; fails with `GUARD_EXCEEDED` above `max_n`.
 *
 * # Safety
 * Handles must be live; pointers writable.
 */
enum VecchiaStatus vecchia_exact_loglik(const struct VecchiaDataset *ds,
                                        const struct VecchiaKernel *kernel,
                                        size_t max_n,
                                        double *out);

/**
 * KL divergence between the exact field over `ds`'s locations and its
 * Vecchia approximation under `plan`.
 *
 * # Safety
 * Handles must be live and `plan` built from `ds`; pointers writable.
 */
enum VecchiaStatus vecchia_kl(const struct VecchiaDataset *ds,
                              const struct VecchiaPlanHandle *plan,
                              const struct VecchiaKernel *kernel,
                              size_t max_n,
                              double *out);

/**
 * Kriging predictions at `n_test` locations from the `m` nearest training
 * points. `mse_out` may be NULL; when `truth` is non-NULL the mean squared
 * error is written there.
 *
 * # Safety
 * `train` must be live; arrays must hold `n_test` doubles.
 */
enum VecchiaStatus vecchia_krige(const struct VecchiaDataset *train,
                                 const struct VecchiaKernel *kernel,
                                 const double *test_x,
                                 const double *test_y,
                                 size_t n_test,
                                 size_t m,
                                 const double *truth,
                                 double *predictions,
                                 double *mse_out);

/**
 * Maximum-likelihood estimate starting from `kernel`'s parameters.
 * Writes the estimate into `theta_out` (`sigma2, beta, nu`) and the
 * maximized log-likelihood into `loglik_out`.
 *
 * # Safety
 * Handles must be live; `theta_out` must hold 3 doubles.
 */
enum VecchiaStatus vecchia_estimate(const struct VecchiaDataset *ds,
                                    const struct VecchiaKernel *kernel,
                                    const struct VecchiaFitOptions *options,
                                    double *theta_out,
                                    double *loglik_out);

/**
 * Modeled flops of one likelihood evaluation with `n` points and
 * conditioning size `m` (requires `n > m >= 1`; returns NaN otherwise).
 */
double vecchia_flop_count(size_t n, size_t m);

/**
 * Covariance at distance `d` for `kernel`; NaN for invalid parameters.
 *
 * # Safety
 * `kernel` must be readable.
 */
double vecchia_covariance(const struct VecchiaKernel *kernel, double d);

/**
 * Modified Bessel function of the second kind `K_nu(x)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum VecchiaStatus vecchia_bessel_kv(double nu, double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VECCHIA_FFI_H */
