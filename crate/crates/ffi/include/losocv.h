#ifndef LOSOCV_H
#define LOSOCV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LosocvStatus {
  LOSOCV_STATUS_OK = 0,
  LOSOCV_STATUS_NULL_POINTER = 1,
  LOSOCV_STATUS_INVALID_UTF8 = 2,
  LOSOCV_STATUS_CONFIG = 3,
  LOSOCV_STATUS_DATA = 4,
  LOSOCV_STATUS_MODEL = 5,
  LOSOCV_STATUS_IO = 6,
  /**
   * The metric is undefined for the input; the reason is the last error message.
   */
  LOSOCV_STATUS_UNDEFINED = 7,
  LOSOCV_STATUS_PANIC = 8,
} LosocvStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct LosocvConfig LosocvConfig;

/**
 * Opaque table of experiment results.
 */
typedef struct LosocvResults LosocvResults;

/**
 * Opaque set of studies loaded from a CSV file.
 */
typedef struct LosocvStudies LosocvStudies;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *losocv_version(void);

/**
 * Message of the last failed call on this thread, or null. Free with [`losocv_string_free`].
 */
char *losocv_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library that has not been freed.
 */
void losocv_string_free(char *s);

/**
 * Load and validate a multi-study CSV (`study_id,outcome,<features...>`).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a writable pointer.
 */
enum LosocvStatus losocv_studies_load(const char *path, struct LosocvStudies **out);

/**
 * # Safety
 * `studies` must be a live handle and the outputs writable.
 */
enum LosocvStatus losocv_studies_shape(const struct LosocvStudies *studies,
                                       size_t *n_studies,
                                       size_t *n_samples,
                                       size_t *n_features);

/**
 * # Safety
 * `studies` must be null or a handle from [`losocv_studies_load`] not yet freed.
 */
void losocv_studies_free(struct LosocvStudies *studies);

/**
 * Parse a JSON experiment configuration; `{}` gives the defaults.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a writable pointer.
 */
enum LosocvStatus losocv_config_from_json(const char *json, struct LosocvConfig **out);

/**
 * # Safety
 * `config` must be null or a handle from [`losocv_config_from_json`] not yet freed.
 */
void losocv_config_free(struct LosocvConfig *config);

/**
 * Run the experiment described by `config` (simulation, sweep or external mode).
 *
 * # Safety
 * `config` must be a live handle and `out` a writable pointer.
 */
enum LosocvStatus losocv_experiment_run(const struct LosocvConfig *config,
                                        struct LosocvResults **out);

/**
 * # Safety
 * `results` must be a live handle and `rows` writable.
 */
enum LosocvStatus losocv_results_row_count(const struct LosocvResults *results, size_t *rows);

/**
 * Render the results as CSV text. Free the string with [`losocv_string_free`].
 *
 * # Safety
 * `results` must be a live handle and `out` a writable pointer.
 */
enum LosocvStatus losocv_results_to_csv(const struct LosocvResults *results, char **out);

/**
 * # Safety
 * `results` must be a live handle and `path` a valid NUL-terminated string.
 */
enum LosocvStatus losocv_results_write_csv(const struct LosocvResults *results, const char *path);

/**
 * Box plot of one metric's aggregate rows, written as SVG.
 *
 * # Safety
 * `results` must be a live handle; `metric` and `path` valid NUL-terminated strings.
 */
enum LosocvStatus losocv_results_write_boxplot(const struct LosocvResults *results,
                                               const char *metric,
                                               const char *path);

/**
 * Line chart of one metric across sweep values, written as SVG.
 *
 * # Safety
 * `results` must be a live handle; `metric` and `path` valid NUL-terminated strings.
 */
enum LosocvStatus losocv_results_write_linechart(const struct LosocvResults *results,
                                                 const char *metric,
                                                 const char *path);

/**
 * # Safety
 * `results` must be null or a handle from [`losocv_experiment_run`] not yet freed.
 */
void losocv_results_free(struct LosocvResults *results);

/**
 * Area under the ROC curve with ties counted as one half.
 *
 * # Safety
 * `scores` and `truths` must point to `n` readable values; `out` must be writable.
 */
enum LosocvStatus losocv_auc(const double *scores, const double *truths, size_t n, double *out);

/**
 * Out-of-sample R² against the mean of `truths`.
 *
 * # Safety
 * `scores` and `truths` must point to `n` readable values; `out` must be writable.
 */
enum LosocvStatus losocv_generalized_r2(const double *scores,
                                        const double *truths,
                                        size_t n,
                                        double *out);

/**
 * Score threshold that classifies `target_prevalence` of `scores` as positive.
 *
 * # Safety
 * `scores` must point to `n` readable values; `out` must be writable.
 */
enum LosocvStatus losocv_calibration_threshold(const double *scores,
                                               size_t n,
                                               double target_prevalence,
                                               double *out);

/**
 * Response rates among samples scoring at or above `threshold` (`orr1`) and below it (`orr0`), and their difference.
 *
 * # Safety
 * `scores` and `truths` must point to `n` readable values; outputs must be writable.
 */
enum LosocvStatus losocv_delta_orr(const double *scores,
                                   const double *truths,
                                   size_t n,
                                   double threshold,
                                   double *orr1,
                                   double *orr0,
                                   double *delta);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOSOCV_H */
