#ifndef ACCMARKET_H
#define ACCMARKET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AmStatus {
  AM_STATUS_OK = 0,
  AM_STATUS_NULL_POINTER = 1,
  AM_STATUS_INVALID_ARGUMENT = 2,
  AM_STATUS_CONFIG = 3,
  AM_STATUS_IO = 4,
  AM_STATUS_RUNTIME = 5,
  AM_STATUS_PANIC = 6,
} AmStatus;

// A labelled dataset.
typedef struct AmDataset AmDataset;

// The result of one dynamics run.
typedef struct AmTrajectory AmTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until
// the next failing call on the same thread.
const char *am_last_error(void);

// Library version as a static NUL-terminated string.
const char *am_version(void);

// Builds a dataset from `m` row-major rows of `d` features and labels in
// {-1, +1}.
//
// # Safety
// `features` must hold `m * d` values, `labels` `m` values, and `out` must
// be writable.
enum AmStatus am_dataset_new(const double *features,
                             size_t m,
                             size_t d,
                             const int8_t *labels,
                             struct AmDataset **out);

// Loads a numeric CSV; rows whose `label_column` equals `positive_label`
// get label +1, the rest -1.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum AmStatus am_dataset_load_csv(const char *path,
                                  const char *label_column,
                                  const char *positive_label,
                                  struct AmDataset **out);

// Draws `m` one-feature examples: class y has mean `a * y` and standard
// deviation `sigma_neg` or `sigma_pos`; P(y = +1) = `prior`.
//
// # Safety
// `out` must be writable.
enum AmStatus am_dataset_sample_gaussian(double a,
                                         double sigma_neg,
                                         double sigma_pos,
                                         double prior,
                                         size_t m,
                                         uint64_t seed,
                                         struct AmDataset **out);

// Number of examples; 0 for a null handle.
//
// # Safety
// `data` must be null or a live handle.
size_t am_dataset_len(const struct AmDataset *data);

// Number of features; 0 for a null handle.
//
// # Safety
// `data` must be null or a live handle.
size_t am_dataset_dim(const struct AmDataset *data);

// # Safety
// `data` must be null or a handle not yet freed.
void am_dataset_free(struct AmDataset *data);

// Market shares and welfare of an `n x m` correctness table given
// row-major as 0/1 bytes. `shares` receives `n` values.
//
// # Safety
// `correct` must hold `n * m` bytes, `shares` room for `n` values, and
// `welfare` must be writable.
enum AmStatus am_market_shares(const uint8_t *correct,
                               size_t n,
                               size_t m,
                               double *shares,
                               double *welfare);

// Best threshold response to an opponent at `tau_opp`, searching
// `[lo, hi]` (either may be infinite).
//
// # Safety
// `tau` and `share` must be writable.
enum AmStatus am_threshold_best_response(double a,
                                         double sigma_neg,
                                         double sigma_pos,
                                         double prior,
                                         double tau_opp,
                                         double lo,
                                         double hi,
                                         double *tau,
                                         double *share);

// Runs best-response dynamics on `train` with the providers and dynamics
// settings of a TOML run configuration (any data section is ignored).
//
// # Safety
// `config_toml` must be NUL-terminated, `train` a live handle, `test` null
// or a live handle, and `out` writable.
enum AmStatus am_dynamics_run(const char *config_toml,
                              const struct AmDataset *train,
                              const struct AmDataset *test,
                              struct AmTrajectory **out);

// Number of providers; 0 for a null handle.
//
// # Safety
// `t` must be null or a live handle.
size_t am_trajectory_providers(const struct AmTrajectory *t);

// Rounds played, not counting the initialization.
//
// # Safety
// `t` must be null or a live handle.
size_t am_trajectory_rounds(const struct AmTrajectory *t);

// Number of adopted moves.
//
// # Safety
// `t` must be null or a live handle.
size_t am_trajectory_moves(const struct AmTrajectory *t);

// True when the last round adopted no move.
//
// # Safety
// `t` must be null or a live handle.
bool am_trajectory_converged(const struct AmTrajectory *t);

// Final train shares into `shares[0..len]` and final train welfare.
//
// # Safety
// `t` must be a live handle, `shares` room for `len` values, `welfare`
// writable.
enum AmStatus am_trajectory_final(const struct AmTrajectory *t,
                                  double *shares,
                                  size_t len,
                                  double *welfare);

// The full trajectory as JSON. Release with [`am_string_free`].
//
// # Safety
// `t` must be a live handle and `out` writable.
enum AmStatus am_trajectory_json(const struct AmTrajectory *t, char **out);

// # Safety
// `t` must be null or a handle not yet freed.
void am_trajectory_free(struct AmTrajectory *t);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void am_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACCMARKET_H */
