#ifndef SURVBENIM_H
#define SURVBENIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Explanation method selector for `svbn_explain`.
 */
typedef enum SvbnMethod {
  /**
   * Beran surrogate with per-feature neural importance functions.
   */
  SvbnMethodBenim = 0,
  /**
   * Weighted least-squares Cox surrogate.
   */
  SvbnMethodSurvlime = 1,
  /**
   * Beran surrogate with scalar per-feature importances.
   */
  SvbnMethodSurvbex = 2,
  /**
   * Additive-model surrogate on the cumulative hazard.
   */
  SvbnMethodSurvnam = 3,
} SvbnMethod;

/**
 * Result code of a fallible call.
 */
typedef enum SvbnStatus {
  /**
   * The call succeeded.
   */
  SvbnOk = 0,
  /**
   * A required pointer argument was null.
   */
  SvbnNullPointer = 1,
  /**
   * An argument was out of range or inconsistent.
   */
  SvbnInvalidArgument = 2,
  /**
   * A string argument was not valid UTF-8.
   */
  SvbnUtf8Error = 3,
  /**
   * The operation itself failed; see `svbn_last_error`.
   */
  SvbnRuntimeError = 4,
  /**
   * The supplied output buffer is too small.
   */
  SvbnBufferTooSmall = 5,
  /**
   * The library panicked internally; see `svbn_last_error`.
   */
  SvbnPanic = 6,
} SvbnStatus;

/**
 * Opaque survival dataset handle.
 */
typedef struct SvbnDataset SvbnDataset;

/**
 * Opaque random survival forest handle.
 */
typedef struct SvbnForest SvbnForest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread.
 *
 * The pointer stays valid until the next failing call on the same
 * thread. Never pass it to `free`.
 */
const char *svbn_last_error(void);

/**
 * Build a dataset from row-major features plus per-record times and
 * event indicators (nonzero = event observed, zero = censored).
 *
 * `features` holds `n_records * n_features` values; record `i` owns
 * `features[i*n_features .. (i+1)*n_features]`.
 *
 * Returns null on failure.
 *
 * # Safety
 * `features` must point to `n_records * n_features` readable doubles;
 * `times` and `events` must point to `n_records` readable elements.
 */
struct SvbnDataset *svbn_dataset_new(const double *features,
                                     const double *times,
                                     const uint8_t *events,
                                     uintptr_t n_records,
                                     uintptr_t n_features);

/**
 * Generate one of the built-in clustered synthetic datasets
 * (`"2c5f"`, `"2c20f"`, `"5c10f"`, ...). Returns null on failure.
 *
 * # Safety
 * `preset` must be a valid nul-terminated string.
 */
struct SvbnDataset *svbn_dataset_generate(const char *preset, uint64_t seed);

/**
 * Number of records in the dataset (0 if `dataset` is null).
 */
uintptr_t svbn_dataset_len(const struct SvbnDataset *dataset);

/**
 * Number of features per record (0 if `dataset` is null).
 */
uintptr_t svbn_dataset_dim(const struct SvbnDataset *dataset);

/**
 * Release a dataset handle. Null is a no-op.
 *
 * # Safety
 * `dataset` must be a pointer returned by this library and not yet freed.
 */
void svbn_dataset_free(struct SvbnDataset *dataset);

/**
 * Fit a random survival forest on `dataset`.
 *
 * Pass 0 for `n_trees`, `max_depth` or `min_leaf_events` to use the
 * defaults (100 trees, depth 8, 3 events per leaf). Returns null on
 * failure.
 *
 * # Safety
 * `dataset` must be a live handle from this library.
 */
struct SvbnForest *svbn_rsf_fit(const struct SvbnDataset *dataset,
                                uintptr_t n_trees,
                                uintptr_t max_depth,
                                uintptr_t min_leaf_events,
                                uint64_t seed);

/**
 * Release a forest handle. Null is a no-op.
 *
 * # Safety
 * `forest` must be a pointer returned by this library and not yet freed.
 */
void svbn_rsf_free(struct SvbnForest *forest);

/**
 * Expected survival time predicted by the forest for feature vector
 * `x` of length `n_features`, written to `out`.
 *
 * # Safety
 * `forest` must be a live handle; `x` must point to `n_features`
 * readable doubles; `out` must be writable.
 */
enum SvbnStatus svbn_rsf_expected_time(const struct SvbnForest *forest,
                                       const double *x,
                                       uintptr_t n_features,
                                       double *out);

/**
 * Survival function predicted by the forest for `x`.
 *
 * Writes up to `capacity` step points into `out_times`/`out_values`
 * and the true number of points into `out_len`. Call once with
 * `capacity == 0` (null buffers allowed) to query the length; a
 * second call with a large enough buffer fills it.
 *
 * # Safety
 * `forest` must be a live handle; `x` must point to `n_features`
 * readable doubles; `out_times`/`out_values` must hold `capacity`
 * writable doubles; `out_len` must be writable.
 */
enum SvbnStatus svbn_rsf_predict_sf(const struct SvbnForest *forest,
                                    const double *x,
                                    uintptr_t n_features,
                                    double *out_times,
                                    double *out_values,
                                    uintptr_t capacity,
                                    uintptr_t *out_len);

/**
 * Serialize the forest to JSON. The returned string must be released
 * with `svbn_string_free`. Returns null on failure.
 *
 * # Safety
 * `forest` must be a live handle from this library.
 */
char *svbn_rsf_to_json(const struct SvbnForest *forest);

/**
 * Deserialize a forest previously produced by `svbn_rsf_to_json`.
 * Returns null on failure.
 *
 * # Safety
 * `json` must be a valid nul-terminated string.
 */
struct SvbnForest *svbn_rsf_from_json(const char *json);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must be a string returned by this library and not yet freed.
 */
void svbn_string_free(char *s);

/**
 * Explain the forest's prediction at anchor `x` with the chosen
 * method and default hyperparameters.
 *
 * Writes the raw per-feature importance vector (length `n_features`,
 * which must equal the dataset dimension) into `out_importance`.
 * Larger magnitude means more influence on the prediction; normalize
 * by the sum of absolute values to compare across anchors.
 *
 * # Safety
 * `forest` and `dataset` must be live handles; `x` must point to
 * `n_features` readable doubles and `out_importance` to `n_features`
 * writable doubles.
 */
enum SvbnStatus svbn_explain(const struct SvbnForest *forest,
                             const struct SvbnDataset *dataset,
                             const double *x,
                             uintptr_t n_features,
                             enum SvbnMethod method,
                             uint64_t seed,
                             double *out_importance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURVBENIM_H */
