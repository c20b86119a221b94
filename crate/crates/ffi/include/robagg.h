#ifndef ROBAGG_H
#define ROBAGG_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RobaggLoss {
  ROBAGG_LOSS_L1 = 0,
  ROBAGG_LOSS_L2 = 1,
} RobaggLoss;

/**
 * Result codes.
 */
typedef enum RobaggStatus {
  ROBAGG_STATUS_OK = 0,
  ROBAGG_STATUS_NULL_POINTER = 1,
  ROBAGG_STATUS_INVALID_ARGUMENT = 2,
  ROBAGG_STATUS_DOMAIN = 3,
  ROBAGG_STATUS_RESOURCE = 4,
  ROBAGG_STATUS_IO = 5,
  ROBAGG_STATUS_PANIC = 6,
} RobaggStatus;

/**
 * Forecast table indexed by the number of H reports, `0..=n`.
 */
typedef struct RobaggAggregator RobaggAggregator;

/**
 * Instance parameters `(n, k, mu, a, b)`.
 */
typedef struct RobaggParams RobaggParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *robagg_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum RobaggStatus robagg_params_new(size_t n,
                                    size_t k,
                                    double mu,
                                    double a,
                                    double b,
                                    struct RobaggParams **out);

/**
 * # Safety
 * `p` must come from `robagg_params_new` or be NULL.
 */
void robagg_params_free(struct RobaggParams *p);

/**
 * Truncated mean for `n` experts ignoring `k` reports at each end.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RobaggStatus robagg_k_ignorance_dictator(size_t n, size_t k, struct RobaggAggregator **out);

/**
 * L1-optimal aggregator and its regret. Fails with `Domain` when the closed
 * form does not apply.
 *
 * # Safety
 * `p` must be a live handle; `out` and `regret` valid pointers.
 */
enum RobaggStatus robagg_l1_optimal(const struct RobaggParams *p,
                                    struct RobaggAggregator **out,
                                    double *regret);

/**
 * L2-optimal aggregator against adversaries (`k >= 1`) and its regret.
 *
 * # Safety
 * `p` must be a live handle; `out` and `regret` valid pointers.
 */
enum RobaggStatus robagg_l2_adversarial(const struct RobaggParams *p,
                                        struct RobaggAggregator **out,
                                        double *regret);

/**
 * Epsilon-optimal L2 aggregator without adversaries (`k = 0`). Writes the
 * certified regret and optimality gap.
 *
 * # Safety
 * `p` must be a live handle; the output pointers must be valid.
 */
enum RobaggStatus robagg_solve_l2(const struct RobaggParams *p,
                                  double epsilon,
                                  struct RobaggAggregator **out,
                                  double *regret,
                                  double *gap);

/**
 * Worst-case regret of `f` over all two-point structures and pure strategies.
 *
 * # Safety
 * `f` and `p` must be live handles; `regret` a valid pointer.
 */
enum RobaggStatus robagg_oracle_max_regret(const struct RobaggAggregator *f,
                                           const struct RobaggParams *p,
                                           enum RobaggLoss loss,
                                           double *regret);

/**
 * Aggregator from `len` forecasts in `[0, 1]`, one per H count.
 *
 * # Safety
 * `values` must point to `len` doubles; `out` must be valid.
 */
enum RobaggStatus robagg_aggregator_from_values(const double *values,
                                                size_t len,
                                                struct RobaggAggregator **out);

/**
 * Number of forecasts, `n + 1`. Zero for NULL.
 *
 * # Safety
 * `f` must be a live handle or NULL.
 */
size_t robagg_aggregator_len(const struct RobaggAggregator *f);

/**
 * Copies the forecasts into `buf`, which must hold at least
 * `robagg_aggregator_len(f)` doubles.
 *
 * # Safety
 * `f` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum RobaggStatus robagg_aggregator_values(const struct RobaggAggregator *f,
                                           double *buf,
                                           size_t len);

/**
 * # Safety
 * `f` must come from this library or be NULL.
 */
void robagg_aggregator_free(struct RobaggAggregator *f);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBAGG_H */
