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

#include "mmce/mmce.h"

#include <cstdio>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmce/baselines.hpp"
#include "mmce/error.hpp"
#include "mmce/evaluation.hpp"
#include "mmce/label_store.hpp"
#include "mmce/model_selection.hpp"
#include "mmce/solver.hpp"

struct mmce_labels {
  std::shared_ptr<const mmce::LabelMatrix> matrix;
};

struct mmce_gold {
  mmce::GoldLabels gold;
};

struct mmce_result {
  mmce_method method = MMCE_METHOD_MMCE;
  std::shared_ptr<const mmce::LabelMatrix> labels;
  mmce::Posterior posterior;
  std::vector<int> predictions;
  bool converged = true;
  int iterations = 0;
  std::size_t unlabeled = 0;
  std::vector<double> objective;
  std::vector<mmce::TracePoint> trace;
  std::optional<mmce::ConfusionParams> params;
  mmce::ParamsHeader header;
  std::optional<mmce::DSParams> ds;
};

struct mmce_selection {
  std::vector<double> gammas;
  std::vector<double> scores;
  double gamma = 0.0;
  mmce::RegularizationWeights weights;
  std::optional<mmce::CVReport> cv;
  std::optional<mmce::ValidationReport> validation;
};

struct mmce_predictions {
  mmce::PosteriorTable table;
};

struct mmce_eval {
  mmce::EvalReport report;
  std::string text;
};

namespace {

thread_local std::string g_last_error;

mmce_status fail(mmce_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

mmce_status from_code(mmce::ErrorCode code) {
  using mmce::ErrorCode;
  switch (code) {
    case ErrorCode::Io: return MMCE_ERR_IO;
    case ErrorCode::Parse: return MMCE_ERR_PARSE;
    case ErrorCode::Duplicate: return MMCE_ERR_DUPLICATE;
    case ErrorCode::OutOfRange: return MMCE_ERR_OUT_OF_RANGE;
    case ErrorCode::InvalidArgument: return MMCE_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return MMCE_ERR_DIMENSION;
    case ErrorCode::EmptyInput: return MMCE_ERR_EMPTY;
  }
  return MMCE_ERR_INTERNAL;
}

// Runs body and converts any exception into a status.
template <typename Body>
mmce_status guarded(Body&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const mmce::Error& e) {
    return fail(from_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MMCE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MMCE_ERR_INTERNAL, e.what());
  }
}

#define MMCE_REQUIRE(cond, what) \
  if (!(cond)) return fail(MMCE_ERR_INVALID_ARGUMENT, what)

mmce::LabelMode to_mode(mmce_mode m) {
  switch (m) {
    case MMCE_MODE_MULTICLASS: return mmce::LabelMode::Multiclass;
    case MMCE_MODE_ORDINAL: return mmce::LabelMode::Ordinal;
  }
  throw mmce::Error(mmce::ErrorCode::InvalidArgument, "unknown label mode");
}

mmce::HyperParams to_hyper(const mmce_fit_options& o) {
  mmce::HyperParams h;
  h.mode = to_mode(o.mode);
  switch (o.variant) {
    case MMCE_VARIANT_EUCLIDEAN: h.variant = mmce::RegularizerVariant::Euclidean; break;
    case MMCE_VARIANT_CENTERED: h.variant = mmce::RegularizerVariant::Centered; break;
    default: throw mmce::Error(mmce::ErrorCode::InvalidArgument, "unknown regularizer variant");
  }
  h.alpha = o.alpha;
  h.beta = o.beta;
  h.max_outer_iters = o.max_outer_iters;
  h.inner_gradient_steps = o.inner_gradient_steps;
  h.tol = o.tol;
  mmce::validate(h);
  return h;
}

mmce::CVConfig to_cv(const mmce_fit_options& base, const mmce_cv_options& o) {
  mmce::CVConfig c;
  c.base = to_hyper(base);
  c.folds = o.folds;
  c.seed = o.seed;
  c.threads = o.threads;
  c.scoring = o.scoring == MMCE_SCORING_POINT ? mmce::HeldOutScoring::PointEstimate
                                              : mmce::HeldOutScoring::Marginal;
  if (o.grid != nullptr) c.gamma_grid.assign(o.grid, o.grid + o.grid_size);
  return c;
}

std::size_t count_unlabeled(const mmce::LabelMatrix& labels) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < labels.num_items(); ++j) {
    if (labels.item_observations(j).empty()) ++n;
  }
  return n;
}

template <typename Writer>
mmce_status write_file(const char* path, Writer&& writer) {
  MMCE_REQUIRE(path != nullptr, "path is NULL");
  std::ofstream out(path, std::ios::binary);
  if (!out) return fail(MMCE_ERR_IO, std::string("cannot open ") + path + " for writing");
  writer(out);
  out.flush();
  if (!out) return fail(MMCE_ERR_IO, std::string("write failed: ") + path);
  return MMCE_OK;
}

}  // namespace

extern "C" {

const char* mmce_last_error(void) { return g_last_error.c_str(); }

const char* mmce_status_string(mmce_status status) {
  switch (status) {
    case MMCE_OK: return "ok";
    case MMCE_ERR_IO: return "i/o error";
    case MMCE_ERR_PARSE: return "parse error";
    case MMCE_ERR_DUPLICATE: return "duplicate entry";
    case MMCE_ERR_OUT_OF_RANGE: return "value out of range";
    case MMCE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MMCE_ERR_DIMENSION: return "dimension mismatch";
    case MMCE_ERR_EMPTY: return "empty input";
    case MMCE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

/* labels */

mmce_status mmce_labels_load(const char* path, int num_classes, int label_base,
                             mmce_labels** out) {
  MMCE_REQUIRE(path != nullptr && out != nullptr, "NULL argument");
  return guarded([&] {
    auto m = std::make_shared<const mmce::LabelMatrix>(
        mmce::load_labels(path, num_classes, label_base));
    *out = new mmce_labels{std::move(m)};
    return MMCE_OK;
  });
}

mmce_status mmce_labels_from_arrays(int num_classes, size_t count,
                                    const char* const* workers, const char* const* items,
                                    const int* labels, mmce_labels** out) {
  MMCE_REQUIRE(out != nullptr, "NULL argument");
  MMCE_REQUIRE(count == 0 || (workers && items && labels), "NULL array");
  return guarded([&] {
    mmce::IdMap w, it;
    std::vector<mmce::Observation> obs;
    obs.reserve(count);
    for (size_t n = 0; n < count; ++n) {
      MMCE_REQUIRE(workers[n] && items[n], "NULL identifier");
      obs.push_back({w.intern(workers[n]), it.intern(items[n]), labels[n]});
    }
    auto m = std::make_shared<const mmce::LabelMatrix>(num_classes, std::move(w),
                                                       std::move(it), std::move(obs));
    *out = new mmce_labels{std::move(m)};
    return MMCE_OK;
  });
}

void mmce_labels_free(mmce_labels* labels) { delete labels; }

int mmce_labels_num_classes(const mmce_labels* l) { return l ? l->matrix->num_classes() : 0; }
size_t mmce_labels_num_items(const mmce_labels* l) { return l ? l->matrix->num_items() : 0; }
size_t mmce_labels_num_workers(const mmce_labels* l) { return l ? l->matrix->num_workers() : 0; }
size_t mmce_labels_num_labels(const mmce_labels* l) { return l ? l->matrix->num_labels() : 0; }

const char* mmce_labels_item_name(const mmce_labels* l, size_t index) {
  if (!l || index >= l->matrix->num_items()) return nullptr;
  return l->matrix->item_ids().name(index).c_str();
}

const char* mmce_labels_worker_name(const mmce_labels* l, size_t index) {
  if (!l || index >= l->matrix->num_workers()) return nullptr;
  return l->matrix->worker_ids().name(index).c_str();
}

mmce_status mmce_summarize(const mmce_labels* labels, const mmce_gold* gold,
                           mmce_summary* out) {
  MMCE_REQUIRE(labels != nullptr && out != nullptr, "NULL argument");
  return guarded([&] {
    const auto s = mmce::summarize(*labels->matrix, gold ? &gold->gold : nullptr);
    out->num_classes = s.num_classes;
    out->num_items = s.num_items;
    out->num_workers = s.num_workers;
    out->num_labels = s.num_labels;
    out->labels_per_worker = s.labels_per_worker;
    out->labels_per_item = s.labels_per_item;
    out->has_worker_error_rate = s.worker_error_rate.has_value();
    out->worker_error_rate = s.worker_error_rate.value_or(0.0);
    return MMCE_OK;
  });
}

/* gold */

mmce_status mmce_gold_load(const char* path, const mmce_labels* labels, int label_base,
                           int skip_unknown, mmce_gold** out) {
  MMCE_REQUIRE(path && labels && out, "NULL argument");
  return guarded([&] {
    auto policy = skip_unknown ? mmce::UnknownItemPolicy::Skip : mmce::UnknownItemPolicy::Reject;
    *out = new mmce_gold{mmce::load_gold(path, labels->matrix->item_ids(),
                                         labels->matrix->num_classes(), label_base, policy)};
    return MMCE_OK;
  });
}

mmce_status mmce_gold_load_for_predictions(const char* path,
                                           const mmce_predictions* predictions,
                                           int label_base, mmce_gold** out) {
  MMCE_REQUIRE(path && predictions && out, "NULL argument");
  return guarded([&] {
    const auto& t = predictions->table;
    *out = new mmce_gold{mmce::load_gold(path, t.items,
                                         static_cast<int>(t.posterior.num_classes()),
                                         label_base, mmce::UnknownItemPolicy::Skip)};
    return MMCE_OK;
  });
}

void mmce_gold_free(mmce_gold* gold) { delete gold; }
size_t mmce_gold_size(const mmce_gold* gold) { return gold ? gold->gold.size() : 0; }

/* aggregation */

void mmce_fit_options_init(mmce_fit_options* o) {
  if (!o) return;
  const mmce::HyperParams d;
  o->mode = MMCE_MODE_MULTICLASS;
  o->variant = MMCE_VARIANT_EUCLIDEAN;
  o->alpha = d.alpha;
  o->beta = d.beta;
  o->max_outer_iters = d.max_outer_iters;
  o->inner_gradient_steps = d.inner_gradient_steps;
  o->tol = d.tol;
}

mmce_status mmce_resolve_hyperparams(const mmce_labels* labels, double gamma, double* alpha,
                                     double* beta) {
  MMCE_REQUIRE(labels && alpha && beta, "NULL argument");
  return guarded([&] {
    const auto w = mmce::resolve_hyperparams(gamma, *labels->matrix);
    *alpha = w.alpha;
    *beta = w.beta;
    return MMCE_OK;
  });
}

mmce_status mmce_fit(const mmce_labels* labels, const mmce_fit_options* options,
                     mmce_result** out) {
  MMCE_REQUIRE(labels && options && out, "NULL argument");
  return guarded([&] {
    const auto hyper = to_hyper(*options);
    auto fit = mmce::fit(*labels->matrix, hyper);
    auto r = std::make_unique<mmce_result>();
    r->method = MMCE_METHOD_MMCE;
    r->labels = labels->matrix;
    r->predictions = fit.posterior.hard_labels();
    r->posterior = std::move(fit.posterior);
    r->converged = fit.converged;
    r->iterations = fit.iterations;
    r->unlabeled = fit.unlabeled_items;
    r->objective = fit.objective_values();
    r->trace = std::move(fit.trace);
    r->params = std::move(fit.params);
    r->header = {hyper.alpha, hyper.beta, hyper.variant};
    *out = r.release();
    return MMCE_OK;
  });
}

mmce_status mmce_majority_vote(const mmce_labels* labels, mmce_result** out) {
  MMCE_REQUIRE(labels && out, "NULL argument");
  return guarded([&] {
    auto mv = mmce::majority_vote(*labels->matrix);
    auto r = std::make_unique<mmce_result>();
    r->method = MMCE_METHOD_MV;
    r->labels = labels->matrix;
    r->predictions = std::move(mv.labels);
    r->posterior = std::move(mv.posterior);
    r->unlabeled = count_unlabeled(*labels->matrix);
    *out = r.release();
    return MMCE_OK;
  });
}

void mmce_ds_options_init(mmce_ds_options* o) {
  if (!o) return;
  const mmce::DSOptions d;
  o->max_iters = d.max_iters;
  o->tol = d.tol;
  o->smoothing = d.smoothing;
  o->uniform_prior = d.uniform_prior ? 1 : 0;
}

mmce_status mmce_dawid_skene(const mmce_labels* labels, const mmce_ds_options* options,
                             mmce_result** out) {
  MMCE_REQUIRE(labels && out, "NULL argument");
  return guarded([&] {
    mmce::DSOptions o;
    if (options) {
      o.max_iters = options->max_iters;
      o.tol = options->tol;
      o.smoothing = options->smoothing;
      o.uniform_prior = options->uniform_prior != 0;
    }
    auto ds = mmce::dawid_skene_em(*labels->matrix, o);
    auto r = std::make_unique<mmce_result>();
    r->method = MMCE_METHOD_DS;
    r->labels = labels->matrix;
    r->predictions = ds.posterior.hard_labels();
    r->posterior = std::move(ds.posterior);
    r->converged = ds.converged;
    r->iterations = ds.iterations;
    r->unlabeled = count_unlabeled(*labels->matrix);
    r->objective = std::move(ds.objective_trace);
    r->ds = std::move(ds.params);
    *out = r.release();
    return MMCE_OK;
  });
}

void mmce_result_free(mmce_result* result) { delete result; }

mmce_method mmce_result_method(const mmce_result* r) { return r ? r->method : MMCE_METHOD_MMCE; }
size_t mmce_result_num_items(const mmce_result* r) { return r ? r->posterior.num_items() : 0; }
size_t mmce_result_num_classes(const mmce_result* r) {
  return r ? r->posterior.num_classes() : 0;
}
const double* mmce_result_posterior(const mmce_result* r) {
  return r ? r->posterior.flat().data() : nullptr;
}
const int* mmce_result_predictions(const mmce_result* r) {
  return r ? r->predictions.data() : nullptr;
}
int mmce_result_converged(const mmce_result* r) { return r && r->converged ? 1 : 0; }
int mmce_result_iterations(const mmce_result* r) { return r ? r->iterations : 0; }
size_t mmce_result_unlabeled_items(const mmce_result* r) { return r ? r->unlabeled : 0; }
size_t mmce_result_trace_length(const mmce_result* r) { return r ? r->objective.size() : 0; }
const double* mmce_result_trace(const mmce_result* r) {
  return r ? r->objective.data() : nullptr;
}

mmce_status mmce_result_write_posterior(const mmce_result* r, const char* path) {
  MMCE_REQUIRE(r != nullptr, "NULL result");
  return guarded([&] {
    return write_file(path, [&](std::ostream& out) {
      mmce::write_posterior(out, r->labels->item_ids(), r->posterior, r->predictions);
    });
  });
}

mmce_status mmce_result_write_params(const mmce_result* r, const char* path) {
  MMCE_REQUIRE(r != nullptr, "NULL result");
  MMCE_REQUIRE(r->params || r->ds, "majority vote has no parameters");
  return guarded([&] {
    return write_file(path, [&](std::ostream& out) {
      if (r->params) {
        mmce::write_params(out, *r->params, *r->labels, r->header);
      } else {
        mmce::write_ds_params(out, *r->ds, *r->labels);
      }
    });
  });
}

mmce_status mmce_result_write_trace(const mmce_result* r, const char* path) {
  MMCE_REQUIRE(r != nullptr, "NULL result");
  MMCE_REQUIRE(r->method != MMCE_METHOD_MV, "majority vote has no objective trace");
  return guarded([&] {
    return write_file(path, [&](std::ostream& out) {
      if (r->method == MMCE_METHOD_MMCE) {
        mmce::write_trace(out, r->trace);
        return;
      }
      out << "iter,phase,objective\n";
      char buf[64];
      for (std::size_t n = 0; n < r->objective.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%.12g", r->objective[n]);
        out << n + 1 << ",em," << buf << '\n';
      }
    });
  });
}

/* model selection */

void mmce_cv_options_init(mmce_cv_options* o) {
  if (!o) return;
  const mmce::CVConfig d;
  o->folds = d.folds;
  o->seed = d.seed;
  o->threads = d.threads;
  o->scoring = MMCE_SCORING_MARGINAL;
  o->grid = nullptr;
  o->grid_size = 0;
}

mmce_status mmce_cross_validate(const mmce_labels* labels, const mmce_fit_options* base,
                                const mmce_cv_options* options, mmce_selection** out) {
  MMCE_REQUIRE(labels && base && options && out, "NULL argument");
  return guarded([&] {
    auto report = mmce::cross_validate(*labels->matrix, to_cv(*base, *options));
    auto s = std::make_unique<mmce_selection>();
    s->gammas = report.gammas;
    s->scores = report.mean_loglik;
    s->gamma = report.selected_gamma;
    s->weights = report.weights;
    s->cv = std::move(report);
    *out = s.release();
    return MMCE_OK;
  });
}

mmce_status mmce_validation_select(const mmce_labels* labels, const mmce_gold* gold,
                                   const mmce_fit_options* base,
                                   const mmce_cv_options* options, mmce_selection** out) {
  MMCE_REQUIRE(labels && gold && base && options && out, "NULL argument");
  return guarded([&] {
    auto report = mmce::validation_select(*labels->matrix, gold->gold, to_cv(*base, *options));
    auto s = std::make_unique<mmce_selection>();
    s->gammas = report.gammas;
    s->scores = report.metric_values;
    s->gamma = report.selected_gamma;
    s->weights = report.weights;
    s->validation = std::move(report);
    *out = s.release();
    return MMCE_OK;
  });
}

void mmce_selection_free(mmce_selection* s) { delete s; }
double mmce_selection_gamma(const mmce_selection* s) { return s ? s->gamma : 0.0; }
double mmce_selection_alpha(const mmce_selection* s) { return s ? s->weights.alpha : 0.0; }
double mmce_selection_beta(const mmce_selection* s) { return s ? s->weights.beta : 0.0; }
size_t mmce_selection_grid_size(const mmce_selection* s) { return s ? s->gammas.size() : 0; }
double mmce_selection_score(const mmce_selection* s, size_t g) {
  return s && g < s->scores.size() ? s->scores[g] : 0.0;
}

mmce_status mmce_selection_write(const mmce_selection* s, const char* path) {
  MMCE_REQUIRE(s != nullptr, "NULL selection");
  return guarded([&] {
    return write_file(path, [&](std::ostream& out) {
      if (s->cv) {
        mmce::write_cv_report(out, *s->cv);
      } else {
        mmce::write_validation_report(out, *s->validation);
      }
    });
  });
}

/* evaluation */

mmce_status mmce_predictions_load(const char* path, mmce_predictions** out) {
  MMCE_REQUIRE(path && out, "NULL argument");
  return guarded([&] {
    *out = new mmce_predictions{mmce::load_posterior(path)};
    return MMCE_OK;
  });
}

void mmce_predictions_free(mmce_predictions* p) { delete p; }
size_t mmce_predictions_num_items(const mmce_predictions* p) {
  return p ? p->table.posterior.num_items() : 0;
}
size_t mmce_predictions_num_classes(const mmce_predictions* p) {
  return p ? p->table.posterior.num_classes() : 0;
}

mmce_status mmce_evaluate(const mmce_predictions* predictions, const mmce_gold* gold,
                          mmce_mode mode, int with_bins, mmce_eval** out) {
  MMCE_REQUIRE(predictions && gold && out, "NULL argument");
  return guarded([&] {
    const auto& t = predictions->table;
    auto e = std::make_unique<mmce_eval>();
    e->report = mmce::evaluate(t.posterior, t.predicted, gold->gold, to_mode(mode),
                               with_bins != 0);
    std::ostringstream text;
    mmce::write_report_text(text, e->report);
    e->text = text.str();
    *out = e.release();
    return MMCE_OK;
  });
}

void mmce_eval_free(mmce_eval* e) { delete e; }
double mmce_eval_error_rate(const mmce_eval* e) { return e ? e->report.error_rate : 0.0; }
int mmce_eval_mse(const mmce_eval* e, double* mse) {
  if (!e || !e->report.mse) return 0;
  if (mse) *mse = *e->report.mse;
  return 1;
}
size_t mmce_eval_num_scored(const mmce_eval* e) { return e ? e->report.n_scored : 0; }
size_t mmce_eval_num_bins(const mmce_eval* e) { return e ? e->report.calibration.size() : 0; }

mmce_status mmce_eval_bin(const mmce_eval* e, size_t index, mmce_calibration_bin* out) {
  MMCE_REQUIRE(e && out, "NULL argument");
  if (index >= e->report.calibration.size()) {
    return fail(MMCE_ERR_OUT_OF_RANGE, "bin index out of range");
  }
  const auto& b = e->report.calibration[index];
  *out = {b.lower, b.upper, b.items, b.error_rate, b.mse};
  return MMCE_OK;
}

const char* mmce_eval_text(const mmce_eval* e) { return e ? e->text.c_str() : ""; }

mmce_status mmce_eval_write_csv(const mmce_eval* e, const char* path) {
  MMCE_REQUIRE(e != nullptr, "NULL report");
  return guarded([&] {
    return write_file(path, [&](std::ostream& out) { mmce::write_report_csv(out, e->report); });
  });
}

}  // extern "C"
