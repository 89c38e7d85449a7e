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

#include "mmce/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <ostream>
#include <random>

#include "mmce/error.hpp"
#include "mmce/evaluation.hpp"

namespace mmce {
namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "gamma grid is empty");
  for (double g : grid) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw Error(ErrorCode::InvalidArgument, "gamma values must be positive");
    }
  }
}

HyperParams with_gamma(const HyperParams& base, double gamma, const LabelMatrix& labels) {
  HyperParams h = base;
  const auto w = resolve_hyperparams(gamma, labels);
  h.alpha = w.alpha;
  h.beta = w.beta;
  return h;
}

// Index of the best score; exact ties go to the smaller gamma.
std::size_t pick(const std::vector<double>& gammas, const std::vector<double>& scores,
                 bool maximize) {
  std::size_t best = 0;
  for (std::size_t g = 1; g < gammas.size(); ++g) {
    const bool better = maximize ? scores[g] > scores[best] : scores[g] < scores[best];
    const bool tie_smaller = scores[g] == scores[best] && gammas[g] < gammas[best];
    if (better || tie_smaller) best = g;
  }
  return best;
}

// Runs fn(0..count-1) with at most `threads` in flight; results by index.
template <typename Fn>
std::vector<double> run_jobs(std::size_t count, int threads, Fn fn) {
  std::vector<double> out(count);
  const std::size_t width = static_cast<std::size_t>(std::max(threads, 1));
  for (std::size_t start = 0; start < count; start += width) {
    const std::size_t stop = std::min(count, start + width);
    if (width == 1) {
      out[start] = fn(start);
      continue;
    }
    std::vector<std::future<double>> pending;
    for (std::size_t n = start; n < stop; ++n) {
      pending.push_back(std::async(std::launch::async, fn, n));
    }
    for (std::size_t n = start; n < stop; ++n) out[n] = pending[n - start].get();
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

RegularizationWeights resolve_hyperparams(double gamma, const LabelMatrix& labels) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be > 0");
  if (labels.num_labels() == 0 || labels.num_workers() == 0 || labels.num_items() == 0) {
    throw Error(ErrorCode::EmptyInput, "cannot resolve hyperparameters for an empty dataset");
  }
  const double K = static_cast<double>(labels.num_classes());
  const double L = static_cast<double>(labels.num_labels());
  const double per_worker = L / static_cast<double>(labels.num_workers());
  const double per_item = L / static_cast<double>(labels.num_items());
  RegularizationWeights w;
  w.alpha = gamma * K * K;
  w.beta = per_worker / per_item * w.alpha;
  return w;
}

std::vector<int> assign_folds(std::size_t num_labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  std::vector<std::size_t> order(num_labels);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(num_labels);
  for (std::size_t pos = 0; pos < num_labels; ++pos) {
    fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
  }
  return fold;
}

double held_out_log_likelihood(const LabelMatrix& train, const FitResult& fit,
                               const LabelMatrix& held_out, HeldOutScoring scoring) {
  const int K = train.num_classes();
  const auto Ku = static_cast<std::size_t>(K);
  if (held_out.num_items() != fit.posterior.num_items() ||
      held_out.num_workers() != fit.params.workers.entities()) {
    throw Error(ErrorCode::DimensionMismatch, "held-out set does not share the training ID maps");
  }
  const Tensor3 sigma = fit.params.dense_workers();
  const Tensor3 tau = fit.params.dense_items();
  std::vector<double> logp(Ku), terms(Ku);
  double total = 0.0;
  for (const auto& o : held_out.observations()) {
    const auto x = static_cast<std::size_t>(o.label);
    if (scoring == HeldOutScoring::PointEstimate) {
      log_label_distribution(sigma.slice(o.worker), tau.slice(o.item), K,
                             fit.posterior.argmax(o.item), logp);
      total += logp[x];
      continue;
    }
    double peak = -INFINITY;
    for (int c = 0; c < K; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      const double q = fit.posterior(o.item, cu);
      if (q <= 0.0) {
        terms[cu] = -INFINITY;
        continue;
      }
      log_label_distribution(sigma.slice(o.worker), tau.slice(o.item), K, c, logp);
      terms[cu] = std::log(q) + logp[x];
      peak = std::max(peak, terms[cu]);
    }
    double z = 0.0;
    for (double t : terms) z += t == -INFINITY ? 0.0 : std::exp(t - peak);
    total += peak + std::log(z);
  }
  return total;
}

CVReport cross_validate(const LabelMatrix& labels, const CVConfig& config) {
  check_grid(config.gamma_grid);
  validate(config.base);
  if (labels.num_labels() == 0) throw Error(ErrorCode::EmptyInput, "no observations");
  const auto folds = static_cast<std::size_t>(config.folds);
  const auto fold_of = assign_folds(labels.num_labels(), config.folds, config.seed);

  std::vector<LabelMatrix> train, test;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> in, out;
    for (std::size_t n = 0; n < fold_of.size(); ++n) {
      (static_cast<std::size_t>(fold_of[n]) == f ? out : in).push_back(n);
    }
    train.push_back(labels.subset(in));
    test.push_back(labels.subset(out));
  }

  const std::size_t grid = config.gamma_grid.size();
  auto job = [&](std::size_t n) {
    const std::size_t g = n / folds, f = n % folds;
    const HyperParams h = with_gamma(config.base, config.gamma_grid[g], labels);
    if (train[f].num_labels() == 0) return 0.0;
    const FitResult r = fit(train[f], h);
    return held_out_log_likelihood(train[f], r, test[f], config.scoring);
  };
  const auto values = run_jobs(grid * folds, config.threads, job);

  CVReport report;
  report.gammas = config.gamma_grid;
  report.fold_loglik.assign(grid, std::vector<double>(folds));
  report.mean_loglik.assign(grid, 0.0);
  for (std::size_t g = 0; g < grid; ++g) {
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      report.fold_loglik[g][f] = values[g * folds + f];
      total += values[g * folds + f];
    }
    report.mean_loglik[g] = total / static_cast<double>(folds);
  }
  report.selected = pick(report.gammas, report.mean_loglik, true);
  report.selected_gamma = report.gammas[report.selected];
  report.weights = resolve_hyperparams(report.selected_gamma, labels);
  return report;
}

ValidationReport validation_select(const LabelMatrix& labels, const GoldLabels& gold,
                                   const CVConfig& config) {
  check_grid(config.gamma_grid);
  validate(config.base);
  if (gold.empty()) throw Error(ErrorCode::EmptyInput, "validation needs gold labels");
  const bool ordinal = config.base.mode == LabelMode::Ordinal;

  auto job = [&](std::size_t g) {
    const FitResult r = fit(labels, with_gamma(config.base, config.gamma_grid[g], labels));
    const auto predictions = r.posterior.hard_labels();
    return ordinal ? mean_square_error(predictions, gold) : error_rate(predictions, gold);
  };

  ValidationReport report;
  report.gammas = config.gamma_grid;
  report.metric = ordinal ? "mse" : "error_rate";
  report.metric_values = run_jobs(config.gamma_grid.size(), config.threads, job);
  report.selected = pick(report.gammas, report.metric_values, false);
  report.selected_gamma = report.gammas[report.selected];
  report.weights = resolve_hyperparams(report.selected_gamma, labels);
  return report;
}

void write_cv_report(std::ostream& out, const CVReport& report) {
  out << "gamma,fold,heldout_loglik\n";
  for (std::size_t g = 0; g < report.gammas.size(); ++g) {
    for (std::size_t f = 0; f < report.fold_loglik[g].size(); ++f) {
      out << num(report.gammas[g]) << ',' << f << ',' << num(report.fold_loglik[g][f]) << '\n';
    }
  }
  for (std::size_t g = 0; g < report.gammas.size(); ++g) {
    out << num(report.gammas[g]) << ",mean," << num(report.mean_loglik[g]) << '\n';
  }
  out << "# selected gamma=" << num(report.selected_gamma) << " alpha="
      << num(report.weights.alpha) << " beta=" << num(report.weights.beta) << '\n';
}

void write_validation_report(std::ostream& out, const ValidationReport& report) {
  out << "gamma," << report.metric << '\n';
  for (std::size_t g = 0; g < report.gammas.size(); ++g) {
    out << num(report.gammas[g]) << ',' << num(report.metric_values[g]) << '\n';
  }
  out << "# selected gamma=" << num(report.selected_gamma) << " alpha="
      << num(report.weights.alpha) << " beta=" << num(report.weights.beta) << '\n';
}

}  // namespace mmce
