/* Copyright 2026 The mmce Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* C interface to libmmce.
 *
 * Every object is an opaque handle created by a function that returns an
 * mmce_status and freed by the matching *_free (NULL is accepted). On a
 * non-OK status the out-pointer is left untouched and mmce_last_error()
 * holds a message for the calling thread. Posterior matrices are row-major
 * items x classes. Class labels are always 0-based on this side. */

#ifndef MMCE_MMCE_H_
#define MMCE_MMCE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(MMCE_BUILDING_LIBRARY)
#define MMCE_API __attribute__((visibility("default")))
#else
#define MMCE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mmce_status {
  MMCE_OK = 0,
  MMCE_ERR_IO,
  MMCE_ERR_PARSE,
  MMCE_ERR_DUPLICATE,
  MMCE_ERR_OUT_OF_RANGE,
  MMCE_ERR_INVALID_ARGUMENT,
  MMCE_ERR_DIMENSION,
  MMCE_ERR_EMPTY,
  MMCE_ERR_INTERNAL
} mmce_status;

typedef enum mmce_mode { MMCE_MODE_MULTICLASS = 0, MMCE_MODE_ORDINAL } mmce_mode;
typedef enum mmce_variant { MMCE_VARIANT_EUCLIDEAN = 0, MMCE_VARIANT_CENTERED } mmce_variant;
typedef enum mmce_method { MMCE_METHOD_MMCE = 0, MMCE_METHOD_MV, MMCE_METHOD_DS } mmce_method;
typedef enum mmce_scoring { MMCE_SCORING_MARGINAL = 0, MMCE_SCORING_POINT } mmce_scoring;

typedef struct mmce_labels mmce_labels;
typedef struct mmce_gold mmce_gold;
typedef struct mmce_result mmce_result;
typedef struct mmce_selection mmce_selection;
typedef struct mmce_predictions mmce_predictions;
typedef struct mmce_eval mmce_eval;

MMCE_API const char* mmce_last_error(void);
MMCE_API const char* mmce_status_string(mmce_status status);

/* ---- labels ------------------------------------------------------------ */

/* CSV `worker,item,label` with an optional header line. label_base is 0 or
 * 1 and says how labels are numbered in the file. */
MMCE_API mmce_status mmce_labels_load(const char* path, int num_classes, int label_base,
                                      mmce_labels** out);
MMCE_API mmce_status mmce_labels_from_arrays(int num_classes, size_t count,
                                             const char* const* workers,
                                             const char* const* items, const int* labels,
                                             mmce_labels** out);
MMCE_API void mmce_labels_free(mmce_labels* labels);

MMCE_API int mmce_labels_num_classes(const mmce_labels* labels);
MMCE_API size_t mmce_labels_num_items(const mmce_labels* labels);
MMCE_API size_t mmce_labels_num_workers(const mmce_labels* labels);
MMCE_API size_t mmce_labels_num_labels(const mmce_labels* labels);
/* NULL when index is out of range. */
MMCE_API const char* mmce_labels_item_name(const mmce_labels* labels, size_t index);
MMCE_API const char* mmce_labels_worker_name(const mmce_labels* labels, size_t index);

typedef struct mmce_summary {
  int num_classes;
  size_t num_items;
  size_t num_workers;
  size_t num_labels;
  double labels_per_worker;
  double labels_per_item;
  int has_worker_error_rate;
  double worker_error_rate;
} mmce_summary;

/* gold may be NULL. */
MMCE_API mmce_status mmce_summarize(const mmce_labels* labels, const mmce_gold* gold,
                                    mmce_summary* out);

/* ---- gold labels ------------------------------------------------------- */

/* CSV `item,label`. Items absent from `labels` are an error unless
 * skip_unknown is nonzero. */
MMCE_API mmce_status mmce_gold_load(const char* path, const mmce_labels* labels,
                                    int label_base, int skip_unknown, mmce_gold** out);
/* Same, keyed by the items of a posterior file; unknown items are skipped. */
MMCE_API mmce_status mmce_gold_load_for_predictions(const char* path,
                                                    const mmce_predictions* predictions,
                                                    int label_base, mmce_gold** out);
MMCE_API void mmce_gold_free(mmce_gold* gold);
MMCE_API size_t mmce_gold_size(const mmce_gold* gold);

/* ---- aggregation ------------------------------------------------------- */

typedef struct mmce_fit_options {
  mmce_mode mode;
  mmce_variant variant;
  double alpha;
  double beta;
  int max_outer_iters;
  int inner_gradient_steps;
  double tol;
} mmce_fit_options;

MMCE_API void mmce_fit_options_init(mmce_fit_options* options);

/* alpha = gamma K^2, beta = (labels per worker / labels per item) alpha. */
MMCE_API mmce_status mmce_resolve_hyperparams(const mmce_labels* labels, double gamma,
                                              double* alpha, double* beta);

MMCE_API mmce_status mmce_fit(const mmce_labels* labels, const mmce_fit_options* options,
                              mmce_result** out);
MMCE_API mmce_status mmce_majority_vote(const mmce_labels* labels, mmce_result** out);

typedef struct mmce_ds_options {
  int max_iters;
  double tol;
  double smoothing;
  int uniform_prior;
} mmce_ds_options;

MMCE_API void mmce_ds_options_init(mmce_ds_options* options);
MMCE_API mmce_status mmce_dawid_skene(const mmce_labels* labels,
                                      const mmce_ds_options* options, mmce_result** out);

MMCE_API void mmce_result_free(mmce_result* result);
MMCE_API mmce_method mmce_result_method(const mmce_result* result);
MMCE_API size_t mmce_result_num_items(const mmce_result* result);
MMCE_API size_t mmce_result_num_classes(const mmce_result* result);
MMCE_API const double* mmce_result_posterior(const mmce_result* result);
/* argmax per item, lowest class on ties. */
MMCE_API const int* mmce_result_predictions(const mmce_result* result);
/* Always 1 for majority vote. */
MMCE_API int mmce_result_converged(const mmce_result* result);
MMCE_API int mmce_result_iterations(const mmce_result* result);
MMCE_API size_t mmce_result_unlabeled_items(const mmce_result* result);
/* Objective after every block update (mmce) or EM iteration (ds); empty for
 * majority vote. */
MMCE_API size_t mmce_result_trace_length(const mmce_result* result);
MMCE_API const double* mmce_result_trace(const mmce_result* result);

/* TSV `item\tpredicted\tp0..`. */
MMCE_API mmce_status mmce_result_write_posterior(const mmce_result* result, const char* path);
/* Fitted scores (mmce) or confusion matrices and prior (ds). Majority vote
 * has no parameters and returns MMCE_ERR_INVALID_ARGUMENT. */
MMCE_API mmce_status mmce_result_write_params(const mmce_result* result, const char* path);
/* CSV `iter,phase,objective`. */
MMCE_API mmce_status mmce_result_write_trace(const mmce_result* result, const char* path);

/* ---- model selection --------------------------------------------------- */

typedef struct mmce_cv_options {
  int folds;
  uint64_t seed;
  int threads;
  mmce_scoring scoring;
  /* NULL selects the default grid {0.25, 0.5, 1, 2, 4}. */
  const double* grid;
  size_t grid_size;
} mmce_cv_options;

MMCE_API void mmce_cv_options_init(mmce_cv_options* options);

/* alpha/beta in `base` are ignored; each grid point resolves its own. */
MMCE_API mmce_status mmce_cross_validate(const mmce_labels* labels,
                                         const mmce_fit_options* base,
                                         const mmce_cv_options* options,
                                         mmce_selection** out);
/* Picks the grid point with the lowest error rate (multiclass) or mean
 * square error (ordinal) against gold; folds and seed are unused. */
MMCE_API mmce_status mmce_validation_select(const mmce_labels* labels,
                                            const mmce_gold* gold,
                                            const mmce_fit_options* base,
                                            const mmce_cv_options* options,
                                            mmce_selection** out);
MMCE_API void mmce_selection_free(mmce_selection* selection);
MMCE_API double mmce_selection_gamma(const mmce_selection* selection);
MMCE_API double mmce_selection_alpha(const mmce_selection* selection);
MMCE_API double mmce_selection_beta(const mmce_selection* selection);
MMCE_API size_t mmce_selection_grid_size(const mmce_selection* selection);
/* Mean held-out log-likelihood or validation metric for grid point g. */
MMCE_API double mmce_selection_score(const mmce_selection* selection, size_t g);
MMCE_API mmce_status mmce_selection_write(const mmce_selection* selection, const char* path);

/* ---- evaluation -------------------------------------------------------- */

MMCE_API mmce_status mmce_predictions_load(const char* path, mmce_predictions** out);
MMCE_API void mmce_predictions_free(mmce_predictions* predictions);
MMCE_API size_t mmce_predictions_num_items(const mmce_predictions* predictions);
MMCE_API size_t mmce_predictions_num_classes(const mmce_predictions* predictions);

typedef struct mmce_calibration_bin {
  double lower;
  double upper;
  size_t items;
  double error_rate;
  double mse;
} mmce_calibration_bin;

MMCE_API mmce_status mmce_evaluate(const mmce_predictions* predictions,
                                   const mmce_gold* gold, mmce_mode mode, int with_bins,
                                   mmce_eval** out);
MMCE_API void mmce_eval_free(mmce_eval* eval);
MMCE_API double mmce_eval_error_rate(const mmce_eval* eval);
/* Returns 0 and leaves *mse alone outside ordinal mode. */
MMCE_API int mmce_eval_mse(const mmce_eval* eval, double* mse);
MMCE_API size_t mmce_eval_num_scored(const mmce_eval* eval);
MMCE_API size_t mmce_eval_num_bins(const mmce_eval* eval);
MMCE_API mmce_status mmce_eval_bin(const mmce_eval* eval, size_t index,
                                   mmce_calibration_bin* out);
/* Aligned plain-text report, owned by the handle. */
MMCE_API const char* mmce_eval_text(const mmce_eval* eval);
MMCE_API mmce_status mmce_eval_write_csv(const mmce_eval* eval, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* MMCE_MMCE_H_ */
