#ifndef NSCASCADE_H
#define NSCASCADE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NscStatus {
  NSC_STATUS_OK = 0,
  NSC_STATUS_NULL_POINTER = 1,
  NSC_STATUS_INVALID_ARGUMENT = 2,
  NSC_STATUS_PARSE = 3,
  NSC_STATUS_IO = 4,
  NSC_STATUS_BOUND_PRECONDITION = 5,
  NSC_STATUS_CONFIG = 6,
  NSC_STATUS_PANIC = 7,
} NscStatus;

/**
 * A ranking policy together with its list length.
 */
typedef struct NscPolicy NscPolicy;

/**
 * A piecewise-constant attraction schedule.
 */
typedef struct NscSchedule NscSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *nsc_last_error(void);

/**
 * Creates a policy from a JSON spec such as `{"name": "cascade_swucb", "tau": 500}`.
 * Unset parameters take their horizon-based defaults. `seed` drives any
 * internal randomness.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NscStatus nsc_policy_new(const char *spec_json,
                              size_t num_items,
                              size_t k,
                              uint64_t horizon,
                              uint64_t seed,
                              struct NscPolicy **out);

/**
 * # Safety
 * `policy` must come from [`nsc_policy_new`] and not be used afterwards. NULL is ignored.
 */
void nsc_policy_free(struct NscPolicy *policy);

/**
 * Writes the list for step `t` as `k` one-based item ids.
 *
 * # Safety
 * `policy` must be live and `items_out` must hold `capacity` values.
 */
enum NscStatus nsc_policy_select(struct NscPolicy *policy,
                                 uint64_t t,
                                 uint32_t *items_out,
                                 size_t capacity);

/**
 * Feeds back the click on the list shown at step `t`. `click_position` is
 * 1-based; `k + 1` means no click.
 *
 * # Safety
 * `policy` must be live and `items` must hold `len` values.
 */
enum NscStatus nsc_policy_update(struct NscPolicy *policy,
                                 uint64_t t,
                                 const uint32_t *items,
                                 size_t len,
                                 size_t click_position);

/**
 * Loads a schedule dump written by `nscascade synth`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NscStatus nsc_schedule_load(const char *path, struct NscSchedule **out);

/**
 * Builds a synthetic perturbation schedule around `base` (length `num_items`).
 * `start_with_default` selects the phase of the first epoch.
 *
 * # Safety
 * `base` must hold `num_items` values and `out` must be a valid pointer.
 */
enum NscStatus nsc_schedule_synthetic(const double *base,
                                      size_t num_items,
                                      size_t k,
                                      uint64_t m1,
                                      uint64_t m2,
                                      size_t num_boosted,
                                      double boost_value,
                                      uint64_t num_cycles,
                                      bool start_with_default,
                                      bool fixed_subset,
                                      uint64_t seed,
                                      struct NscSchedule **out);

/**
 * # Safety
 * `schedule` must come from this library and not be used afterwards. NULL is ignored.
 */
void nsc_schedule_free(struct NscSchedule *schedule);

/**
 * # Safety
 * `schedule` must be live and `out` a valid pointer.
 */
enum NscStatus nsc_schedule_horizon(const struct NscSchedule *schedule, uint64_t *out);

/**
 * # Safety
 * `schedule` must be live and `out` a valid pointer.
 */
enum NscStatus nsc_schedule_num_items(const struct NscSchedule *schedule, size_t *out);

/**
 * # Safety
 * `schedule` must be live and `out` a valid pointer.
 */
enum NscStatus nsc_schedule_segment_count(const struct NscSchedule *schedule, size_t *out);

/**
 * Copies the attraction vector in force at step `t` into `alpha_out`.
 *
 * # Safety
 * `schedule` must be live and `alpha_out` must hold `capacity` values.
 */
enum NscStatus nsc_schedule_alpha_at(const struct NscSchedule *schedule,
                                     uint64_t t,
                                     double *alpha_out,
                                     size_t capacity);

/**
 * Probability that the list (1-based ids) receives a click under `alpha`.
 *
 * # Safety
 * `alpha` must hold `num_items` values, `items` must hold `k`, and `out` must be valid.
 */
enum NscStatus nsc_expected_reward(const double *alpha,
                                   size_t num_items,
                                   const uint32_t *items,
                                   size_t k,
                                   double *out);

/**
 * Expected reward gap between the best list of the same length and this one.
 *
 * # Safety
 * As for [`nsc_expected_reward`].
 */
enum NscStatus nsc_per_step_regret(const double *alpha,
                                   size_t num_items,
                                   const uint32_t *items,
                                   size_t k,
                                   double *out);

/**
 * Discount factor for horizon `n`; a negative `breakpoints` means unknown.
 */
double nsc_gamma_for_horizon(uint64_t horizon, int64_t breakpoints);

/**
 * Window length for horizon `n`; a negative `breakpoints` means unknown.
 */
uint64_t nsc_tau_for_horizon(uint64_t horizon, int64_t breakpoints);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum NscStatus nsc_regret_lower_bound(size_t num_items,
                                      size_t k,
                                      double delta,
                                      double p,
                                      uint64_t horizon,
                                      double *out);

/**
 * DUCB upper bound with the same gap `gap` for every item.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NscStatus nsc_ducb_upper_bound(size_t num_items,
                                    uint64_t horizon,
                                    uint64_t breakpoints,
                                    double gamma,
                                    double epsilon,
                                    double gap,
                                    double *out);

/**
 * SWUCB upper bound with the same gap `gap` for every item.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NscStatus nsc_swucb_upper_bound(size_t num_items,
                                     uint64_t horizon,
                                     uint64_t breakpoints,
                                     uint64_t tau,
                                     double epsilon,
                                     double gap,
                                     double *out);

/**
 * Runs the experiment in the JSON config at `config_path` and writes the
 * regret CSV to `out_path`. `workers = 0` uses all cores.
 *
 * # Safety
 * Both paths must be NUL-terminated strings.
 */
enum NscStatus nsc_run_config(const char *config_path, const char *out_path, size_t workers);

/**
 * Whether the 1-based `id` names one of `num_items` items.
 */
bool nsc_item_id_is_valid(uint32_t id, size_t num_items);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSCASCADE_H */
