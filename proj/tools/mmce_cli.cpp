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

// mmce: crowdsourced label aggregation from the command line.
//
//   mmce stats     --labels L --classes K [--gold G]
//   mmce aggregate --labels L --classes K --out P [--method mmce|mv|ds] ...
//   mmce select    --labels L --classes K --out R [--gold G] [--fit-final] ...
//   mmce evaluate  --posterior P --gold G --out R [--mode ...] [--bins]
//
// Exit status: 0 ok, 1 solver did not converge (outputs still written),
// 2 bad input or usage.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmce/mmce.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitInput = 2;

// Thrown to unwind with a message and exit code 2.
struct UsageError {
  std::string message;
};

void check(mmce_status status, const std::string& context) {
  if (status == MMCE_OK) return;
  throw UsageError{context + ": " + mmce_status_string(status) + ": " + mmce_last_error()};
}

// Handles freed on scope exit.
template <typename T, void (*Free)(T*)>
struct Owned {
  T* ptr = nullptr;
  Owned() = default;
  Owned(const Owned&) = delete;
  Owned& operator=(const Owned&) = delete;
  ~Owned() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Labels = Owned<mmce_labels, mmce_labels_free>;
using Gold = Owned<mmce_gold, mmce_gold_free>;
using Result = Owned<mmce_result, mmce_result_free>;
using Selection = Owned<mmce_selection, mmce_selection_free>;
using Predictions = Owned<mmce_predictions, mmce_predictions_free>;
using Eval = Owned<mmce_eval, mmce_eval_free>;

const std::map<std::string, mmce_mode> kModes = {{"multiclass", MMCE_MODE_MULTICLASS},
                                                 {"ordinal", MMCE_MODE_ORDINAL}};
const std::map<std::string, mmce_variant> kVariants = {{"euclidean", MMCE_VARIANT_EUCLIDEAN},
                                                       {"centered", MMCE_VARIANT_CENTERED}};
const std::map<std::string, mmce_method> kMethods = {
    {"mmce", MMCE_METHOD_MMCE}, {"mv", MMCE_METHOD_MV}, {"ds", MMCE_METHOD_DS}};

struct DataFlags {
  std::string labels;
  int classes = 0;
  int label_base = 0;
};

struct SolverFlags {
  mmce_mode mode = MMCE_MODE_MULTICLASS;
  mmce_variant variant = MMCE_VARIANT_EUCLIDEAN;
  int max_iters = 200;
  int inner_steps = 5;
  double tol = 1e-6;
};

void add_data_flags(CLI::App* cmd, DataFlags& d) {
  cmd->add_option("--labels", d.labels, "CSV of worker,item,label triples")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--classes", d.classes, "number of classes K")
      ->required()
      ->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--label-base", d.label_base, "label numbering in input files")
      ->check(CLI::IsMember({0, 1}));
}

void add_mode_flag(CLI::App* cmd, mmce_mode& mode) {
  cmd->add_option("--mode", mode, "label type")
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
}

void add_solver_flags(CLI::App* cmd, SolverFlags& s) {
  add_mode_flag(cmd, s.mode);
  cmd->add_option("--variant", s.variant, "worker regularizer")
      ->transform(CLI::CheckedTransformer(kVariants, CLI::ignore_case));
  cmd->add_option("--max-iters", s.max_iters, "outer iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--inner-steps", s.inner_steps, "gradient steps per parameter update")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", s.tol, "relative objective change for convergence")
      ->check(CLI::PositiveNumber);
}

mmce_fit_options fit_options(const SolverFlags& s) {
  if (s.mode == MMCE_MODE_ORDINAL && s.variant == MMCE_VARIANT_CENTERED) {
    throw UsageError{"--variant centered is only defined for --mode multiclass"};
  }
  mmce_fit_options o;
  mmce_fit_options_init(&o);
  o.mode = s.mode;
  o.variant = s.variant;
  o.max_outer_iters = s.max_iters;
  o.inner_gradient_steps = s.inner_steps;
  o.tol = s.tol;
  return o;
}

// post.tsv -> post.params.tsv
std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const char* mode_name(mmce_mode m) { return m == MMCE_MODE_ORDINAL ? "ordinal" : "multiclass"; }

void load_labels(const DataFlags& d, Labels& labels) {
  check(mmce_labels_load(d.labels.c_str(), d.classes, d.label_base, labels.out()), d.labels);
}

int write_fit(const Result& result, const std::string& posterior_path,
              const std::optional<std::string>& params_path, const std::string& trace_path) {
  check(mmce_result_write_posterior(result.get(), posterior_path.c_str()), posterior_path);
  if (params_path) {
    check(mmce_result_write_params(result.get(), params_path->c_str()), *params_path);
  }
  if (!trace_path.empty()) {
    check(mmce_result_write_trace(result.get(), trace_path.c_str()), trace_path);
  }
  if (const size_t n = mmce_result_unlabeled_items(result.get()); n > 0) {
    std::fprintf(stderr, "warning: %zu item(s) have no labels; their posterior is uniform\n", n);
  }
  if (!mmce_result_converged(result.get())) {
    std::fprintf(stderr, "warning: not converged after %d iterations\n",
                 mmce_result_iterations(result.get()));
    return kExitNotConverged;
  }
  return kExitOk;
}

/* stats */

struct StatsCommand {
  DataFlags data;
  std::string gold;

  void attach(CLI::App* cmd) {
    add_data_flags(cmd, data);
    cmd->add_option("--gold", gold, "CSV of item,label true labels")->check(CLI::ExistingFile);
  }

  int run() const {
    Labels labels;
    load_labels(data, labels);
    Gold g;
    if (!gold.empty()) {
      check(mmce_gold_load(gold.c_str(), labels.get(), data.label_base, 1, g.out()), gold);
    }
    mmce_summary s;
    check(mmce_summarize(labels.get(), g.get(), &s), "summary");
    std::printf("%9s %9s %9s %9s %14s %12s\n", "# classes", "# items", "# workers", "# labels",
                "labels/worker", "labels/item");
    std::printf("%9d %9zu %9zu %9zu %14.2f %12.2f\n", s.num_classes, s.num_items,
                s.num_workers, s.num_labels, s.labels_per_worker, s.labels_per_item);
    if (s.has_worker_error_rate) {
      std::printf("average worker error rate %.2f%%\n", 100.0 * s.worker_error_rate);
    }
    return kExitOk;
  }
};

/* aggregate */

struct AggregateCommand {
  DataFlags data;
  SolverFlags solver;
  mmce_method method = MMCE_METHOD_MMCE;
  std::optional<double> alpha, beta, gamma;
  std::string out, trace;

  void attach(CLI::App* cmd) {
    add_data_flags(cmd, data);
    add_solver_flags(cmd, solver);
    cmd->add_option("--method", method, "aggregation method")
        ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case));
    cmd->add_option("--alpha", alpha, "worker regularization weight")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--beta", beta, "item regularization weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--gamma", gamma, "regularization scale; sets alpha and beta")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "posterior TSV to write")->required();
    cmd->add_option("--trace", trace, "objective trace CSV to write");
  }

  int run() const {
    const bool any_hyper = alpha || beta || gamma;
    if (method != MMCE_METHOD_MMCE && any_hyper) {
      throw UsageError{"--alpha/--beta/--gamma apply to --method mmce only"};
    }
    if (method == MMCE_METHOD_MMCE) {
      const bool pair = alpha && beta;
      if (gamma ? (alpha || beta) : !pair) {
        throw UsageError{"give either --gamma or both --alpha and --beta"};
      }
    }
    if (method == MMCE_METHOD_MV && !trace.empty()) {
      throw UsageError{"--trace is not available for --method mv"};
    }
    auto options = fit_options(solver);

    Labels labels;
    load_labels(data, labels);
    Result result;
    std::optional<std::string> params_path = sibling(out, ".params.tsv");
    switch (method) {
      case MMCE_METHOD_MMCE: {
        if (gamma) {
          check(mmce_resolve_hyperparams(labels.get(), *gamma, &options.alpha, &options.beta),
                "--gamma");
        } else {
          options.alpha = *alpha;
          options.beta = *beta;
        }
        check(mmce_fit(labels.get(), &options, result.out()), "fit");
        std::printf("method=mmce mode=%s alpha=%s beta=%s", mode_name(solver.mode),
                    num(options.alpha).c_str(), num(options.beta).c_str());
        if (gamma) std::printf(" gamma=%s", num(*gamma).c_str());
        std::printf("\n");
        break;
      }
      case MMCE_METHOD_MV:
        check(mmce_majority_vote(labels.get(), result.out()), "majority vote");
        params_path.reset();
        std::printf("method=mv\n");
        break;
      case MMCE_METHOD_DS: {
        mmce_ds_options ds;
        mmce_ds_options_init(&ds);
        ds.max_iters = solver.max_iters;
        ds.tol = solver.tol;
        check(mmce_dawid_skene(labels.get(), &ds, result.out()), "dawid-skene");
        std::printf("method=ds\n");
        break;
      }
    }
    return write_fit(result, out, params_path, trace);
  }
};

/* select */

struct SelectCommand {
  DataFlags data;
  SolverFlags solver;
  std::string gold, out;
  std::vector<double> grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  int folds = 5;
  std::uint64_t seed = 42;
  int threads = 1;
  bool fit_final = false;

  void attach(CLI::App* cmd) {
    add_data_flags(cmd, data);
    add_solver_flags(cmd, solver);
    cmd->add_option("--gold", gold, "select by validation error against these labels")
        ->check(CLI::ExistingFile);
    cmd->add_option("--grid", grid, "comma-separated gamma values")->delimiter(',');
    cmd->add_option("--folds", folds, "cross-validation folds");
    cmd->add_option("--seed", seed, "fold assignment seed");
    cmd->add_option("--threads", threads, "concurrent fits")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "selection report CSV to write")->required();
    cmd->add_flag("--fit-final", fit_final, "refit on all data with the selected gamma");
  }

  int run() const {
    if (folds < 2) throw UsageError{"--folds must be at least 2"};
    auto options = fit_options(solver);
    Labels labels;
    load_labels(data, labels);

    mmce_cv_options cv;
    mmce_cv_options_init(&cv);
    cv.folds = folds;
    cv.seed = seed;
    cv.threads = threads;
    cv.grid = grid.data();
    cv.grid_size = grid.size();

    Selection selection;
    if (gold.empty()) {
      check(mmce_cross_validate(labels.get(), &options, &cv, selection.out()), "cross-validation");
    } else {
      Gold g;
      check(mmce_gold_load(gold.c_str(), labels.get(), data.label_base, 1, g.out()), gold);
      check(mmce_validation_select(labels.get(), g.get(), &options, &cv, selection.out()),
            "validation");
    }
    check(mmce_selection_write(selection.get(), out.c_str()), out);
    options.alpha = mmce_selection_alpha(selection.get());
    options.beta = mmce_selection_beta(selection.get());
    std::printf("selected gamma=%s alpha=%s beta=%s\n",
                num(mmce_selection_gamma(selection.get())).c_str(), num(options.alpha).c_str(),
                num(options.beta).c_str());
    if (!fit_final) return kExitOk;

    Result result;
    check(mmce_fit(labels.get(), &options, result.out()), "fit");
    return write_fit(result, sibling(out, ".posterior.tsv"), sibling(out, ".params.tsv"), "");
  }
};

/* evaluate */

struct EvaluateCommand {
  std::string posterior, gold, out;
  mmce_mode mode = MMCE_MODE_MULTICLASS;
  int label_base = 0;
  bool bins = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--posterior", posterior, "posterior TSV written by aggregate")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--gold", gold, "CSV of item,label true labels")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "report CSV to write");
    cmd->add_option("--label-base", label_base, "label numbering in the gold file")
        ->check(CLI::IsMember({0, 1}));
    add_mode_flag(cmd, mode);
    cmd->add_flag("--bins", bins, "add the calibration table");
  }

  int run() const {
    Predictions predictions;
    check(mmce_predictions_load(posterior.c_str(), predictions.out()), posterior);
    Gold g;
    check(mmce_gold_load_for_predictions(gold.c_str(), predictions.get(), label_base, g.out()),
          gold);
    Eval report;
    check(mmce_evaluate(predictions.get(), g.get(), mode, bins ? 1 : 0, report.out()),
          "evaluate");
    std::fputs(mmce_eval_text(report.get()), stdout);
    if (!out.empty()) check(mmce_eval_write_csv(report.get(), out.c_str()), out);
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregate noisy crowd labels into estimated true labels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mmce 1.0.0");

  StatsCommand stats;
  AggregateCommand aggregate;
  SelectCommand select;
  EvaluateCommand evaluate;
  auto* stats_cmd = app.add_subcommand("stats", "dataset summary");
  auto* aggregate_cmd = app.add_subcommand("aggregate", "infer true labels");
  auto* select_cmd = app.add_subcommand("select", "choose the regularization scale");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a posterior against true labels");
  stats.attach(stats_cmd);
  aggregate.attach(aggregate_cmd);
  select.attach(select_cmd);
  evaluate.attach(evaluate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (stats_cmd->parsed()) return stats.run();
    if (aggregate_cmd->parsed()) return aggregate.run();
    if (select_cmd->parsed()) return select.run();
    return evaluate.run();
  } catch (const UsageError& e) {
    std::fprintf(stderr, "mmce: %s\n", e.message.c_str());
    return kExitInput;
  }
}
