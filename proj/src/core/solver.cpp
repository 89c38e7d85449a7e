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

#include "mmce/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "mmce/error.hpp"

namespace mmce {
namespace {

constexpr double kProbabilityFloor = 1e-300;

// Dense sigma/tau views of the parameters, expanded once per evaluation.
struct DenseModel {
  Tensor3 sigma;
  Tensor3 tau;
  int num_classes;

  explicit DenseModel(const ConfusionParams& params)
      : sigma(params.dense_workers()), tau(params.dense_items()),
        num_classes(params.num_classes) {}

  void log_probs(const Observation& o, int c, std::span<double> out) const {
    log_label_distribution(sigma.slice(o.worker), tau.slice(o.item), num_classes, c, out);
  }
};

void check_shapes(const LabelMatrix& labels, const Posterior& posterior,
                  const ConfusionParams& params) {
  const auto K = static_cast<std::size_t>(labels.num_classes());
  if (posterior.num_items() != labels.num_items() || posterior.num_classes() != K) {
    throw Error(ErrorCode::DimensionMismatch, "posterior shape does not match label matrix");
  }
  if (params.num_classes != labels.num_classes() ||
      params.workers.entities() != labels.num_workers() ||
      params.items.entities() != labels.num_items()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter shape does not match label matrix");
  }
}

double penalty(const ConfusionParams& params, const HyperParams& hyper) {
  double total = regularizer(params.workers, params.mode, hyper.variant, hyper.alpha).value;
  total += regularizer(params.items, params.mode, RegularizerVariant::Euclidean, hyper.beta).value;
  return total;
}

// The M-step objective: F without the (Q-only) entropy term.
double parameter_objective(const LabelMatrix& labels, const Posterior& posterior,
                           const ConfusionParams& params, const HyperParams& hyper) {
  return expected_log_likelihood(labels, posterior, params) - penalty(params, hyper);
}

// <A d, to + from> / 2 for a quadratic penalty with gradient A x.
double penalty_change(const Tensor3& from, const Tensor3& to, LabelMode mode,
                      RegularizerVariant variant, double weight) {
  if (weight == 0.0) return 0.0;
  Tensor3 diff = to;
  diff.axpy(-1.0, from);
  const Tensor3 g = regularizer(diff, mode, variant, weight).gradient;
  auto a = from.flat(), b = to.flat(), gd = g.flat();
  double total = 0.0;
  for (std::size_t n = 0; n < gd.size(); ++n) total += gd[n] * (a[n] + b[n]);
  return total / 2.0;
}

// parameter_objective(to) - parameter_objective(from), term by term. Small
// steps go through log1p/expm1 so the change keeps full relative precision
// instead of vanishing in the difference of two large sums. The log
// probabilities at `from` are cached, since a line search tries many `to`.
class ObjectiveChange {
 public:
  ObjectiveChange(const LabelMatrix& labels, const Posterior& posterior,
                  const ConfusionParams& from, const HyperParams& hyper)
      : labels_(labels), posterior_(posterior), from_(from), hyper_(hyper),
        K_(static_cast<std::size_t>(labels.num_classes())) {
    const DenseModel before(from);
    logp_.resize(labels.num_labels() * K_ * K_);
    std::size_t at = 0;
    for (const auto& o : labels.observations()) {
      for (std::size_t c = 0; c < K_; ++c, at += K_) {
        before.log_probs(o, static_cast<int>(c), std::span<double>(logp_).subspan(at, K_));
      }
    }
  }

  double operator()(const ConfusionParams& to) const {
    ConfusionParams step = to;
    step.workers.axpy(-1.0, from_.workers);
    step.items.axpy(-1.0, from_.items);
    const DenseModel delta(step);
    std::optional<DenseModel> after;
    std::vector<double> ds(K_), lp(K_);
    double total = 0.0;
    std::size_t at = 0;
    for (const auto& o : labels_.observations()) {
      const auto x = static_cast<std::size_t>(o.label);
      for (std::size_t c = 0; c < K_; ++c, at += K_) {
        const double q = posterior_(o.item, c);
        if (q == 0.0) continue;
        const double* old_lp = logp_.data() + at;
        double largest = 0.0;
        for (std::size_t k = 0; k < K_; ++k) {
          ds[k] = delta.sigma(o.worker, c, k) + delta.tau(o.item, c, k);
          largest = std::max(largest, std::abs(ds[k]));
        }
        if (largest < 1.0) {
          double s = 0.0;
          for (std::size_t k = 0; k < K_; ++k) s += std::exp(old_lp[k]) * std::expm1(ds[k]);
          total += q * (ds[x] - std::log1p(s));
        } else {
          if (!after) after.emplace(to);
          after->log_probs(o, static_cast<int>(c), lp);
          total += q * (lp[x] - old_lp[x]);
        }
      }
    }
    total -= penalty_change(from_.workers, to.workers, from_.mode, hyper_.variant, hyper_.alpha);
    total -= penalty_change(from_.items, to.items, from_.mode, RegularizerVariant::Euclidean,
                            hyper_.beta);
    return total;
  }

 private:
  const LabelMatrix& labels_;
  const Posterior& posterior_;
  const ConfusionParams& from_;
  const HyperParams& hyper_;
  std::size_t K_;
  std::vector<double> logp_;
};

std::size_t count_unlabeled(const LabelMatrix& labels) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < labels.num_items(); ++j) {
    if (labels.item_observations(j).empty()) ++n;
  }
  return n;
}

}  // namespace

void validate(const HyperParams& hyper) {
  if (!(hyper.alpha >= 0.0) || !(hyper.beta >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha and beta must be >= 0");
  }
  if (!(hyper.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
  if (hyper.max_outer_iters < 1 || hyper.inner_gradient_steps < 1) {
    throw Error(ErrorCode::InvalidArgument, "iteration counts must be >= 1");
  }
  if (hyper.mode == LabelMode::Ordinal && hyper.variant == RegularizerVariant::Centered) {
    throw Error(ErrorCode::InvalidArgument, "centered regularizer is multiclass-only");
  }
  const auto& ls = hyper.line_search;
  if (!(ls.initial_step > 0.0) || !(ls.shrink > 0.0 && ls.shrink < 1.0) ||
      !(ls.armijo > 0.0 && ls.armijo < 1.0) || ls.max_halvings < 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid line search settings");
  }
}

const char* to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::Init: return "init";
    case Phase::MStep: return "m_step";
    case Phase::EStep: return "e_step";
  }
  return "?";
}

std::vector<double> FitResult::objective_values() const {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& t : trace) out.push_back(t.objective);
  return out;
}

Posterior initialize_posterior(const LabelMatrix& labels) {
  const auto K = static_cast<std::size_t>(labels.num_classes());
  Posterior q(labels.num_items(), K, 0.0);
  const auto& obs = labels.observations();
  for (std::size_t j = 0; j < labels.num_items(); ++j) {
    auto idx = labels.item_observations(j);
    if (idx.empty()) {
      for (double& v : q.row(j)) v = 1.0 / static_cast<double>(K);
      continue;
    }
    for (std::size_t n : idx) q(j, static_cast<std::size_t>(obs[n].label)) += 1.0;
    const double total = static_cast<double>(idx.size());
    for (double& v : q.row(j)) v /= total;
  }
  return q;
}

Posterior e_step(const LabelMatrix& labels, const ConfusionParams& params,
                 PosteriorUpdate update) {
  const int K = labels.num_classes();
  const auto Ku = static_cast<std::size_t>(K);
  Posterior q(labels.num_items(), Ku, 0.0);
  check_shapes(labels, q, params);
  const DenseModel model(params);
  const auto& obs = labels.observations();
  std::vector<double> score(Ku), logp(Ku);
  for (std::size_t j = 0; j < labels.num_items(); ++j) {
    std::fill(score.begin(), score.end(), 0.0);
    for (std::size_t n : labels.item_observations(j)) {
      const auto x = static_cast<std::size_t>(obs[n].label);
      for (int c = 0; c < K; ++c) {
        model.log_probs(obs[n], c, logp);
        score[static_cast<std::size_t>(c)] += logp[x];
      }
    }
    auto row = q.row(j);
    if (update == PosteriorUpdate::Hard) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < Ku; ++c) {
        if (score[c] > score[best]) best = c;
      }
      row[best] = 1.0;
      continue;
    }
    const double peak = *std::max_element(score.begin(), score.end());
    double z = 0.0;
    for (std::size_t c = 0; c < Ku; ++c) {
      row[c] = std::exp(score[c] - peak);
      z += row[c];
    }
    for (double& v : row) v /= z;
  }
  return q;
}

double expected_log_likelihood(const LabelMatrix& labels, const Posterior& posterior,
                               const ConfusionParams& params) {
  check_shapes(labels, posterior, params);
  const int K = labels.num_classes();
  const DenseModel model(params);
  std::vector<double> logp(static_cast<std::size_t>(K));
  double total = 0.0;
  for (const auto& o : labels.observations()) {
    const auto x = static_cast<std::size_t>(o.label);
    for (int c = 0; c < K; ++c) {
      const double q = posterior(o.item, static_cast<std::size_t>(c));
      if (q == 0.0) continue;
      model.log_probs(o, c, logp);
      total += q * logp[x];
    }
  }
  return total;
}

double posterior_entropy(const Posterior& posterior) {
  double h = 0.0;
  for (double q : posterior.flat()) {
    if (q > 0.0) h -= q * std::log(std::max(q, kProbabilityFloor));
  }
  return h;
}

double dual_objective(const LabelMatrix& labels, const Posterior& posterior,
                      const ConfusionParams& params, const HyperParams& hyper) {
  return parameter_objective(labels, posterior, params, hyper) + posterior_entropy(posterior);
}

ConfusionParams m_step_gradients(const LabelMatrix& labels, const Posterior& posterior,
                                 const ConfusionParams& params, const HyperParams& hyper) {
  check_shapes(labels, posterior, params);
  const int K = labels.num_classes();
  const auto Ku = static_cast<std::size_t>(K);
  const DenseModel model(params);
  Tensor3 grad_sigma(labels.num_workers(), Ku, Ku);
  Tensor3 grad_tau(labels.num_items(), Ku, Ku);
  std::vector<double> logp(Ku);
  // Fixed observation order keeps the accumulation reproducible.
  for (const auto& o : labels.observations()) {
    const auto x = static_cast<std::size_t>(o.label);
    for (int c = 0; c < K; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      const double q = posterior(o.item, cu);
      if (q == 0.0) continue;
      model.log_probs(o, c, logp);
      for (std::size_t k = 0; k < Ku; ++k) {
        const double d = q * ((k == x ? 1.0 : 0.0) - std::exp(logp[k]));
        grad_sigma(o.worker, cu, k) += d;
        grad_tau(o.item, cu, k) += d;
      }
    }
  }

  ConfusionParams grad{params.mode, K, std::move(grad_sigma), std::move(grad_tau)};
  if (params.mode == LabelMode::Ordinal) {
    grad.workers = collapse_to_ordinal(grad.workers, K);
    grad.items = collapse_to_ordinal(grad.items, K);
  }
  grad.workers.axpy(-1.0, regularizer(params.workers, params.mode, hyper.variant, hyper.alpha).gradient);
  if (hyper.clamp_item_params) {
    grad.items = Tensor3(grad.items.entities(), grad.items.rows(), grad.items.cols());
  } else {
    grad.items.axpy(-1.0, regularizer(params.items, params.mode, RegularizerVariant::Euclidean,
                                       hyper.beta).gradient);
  }
  return grad;
}

MStepResult m_step(const LabelMatrix& labels, const Posterior& posterior,
                   const ConfusionParams& params, const HyperParams& hyper) {
  validate(hyper);
  MStepResult result{params, 0, false, 0.0};
  const auto& ls = hyper.line_search;
  for (int step = 0; step < hyper.inner_gradient_steps; ++step) {
    const ConfusionParams grad = m_step_gradients(labels, posterior, result.params, hyper);
    const double slope = grad.squared_norm();
    if (slope == 0.0) break;
    const ObjectiveChange gain_of(labels, posterior, result.params, hyper);
    double t = ls.initial_step;
    bool accepted = false;
    for (int attempt = 0; attempt <= ls.max_halvings; ++attempt, t *= ls.shrink) {
      ConfusionParams candidate = result.params;
      candidate.axpy(t, grad);
      const double gain = gain_of(candidate);
      if (std::isfinite(gain) && gain >= ls.armijo * t * slope) {
        result.params = std::move(candidate);
        result.improvement += gain;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.line_search_failed = true;
      break;
    }
    ++result.accepted_steps;
  }
  return result;
}

FitResult fit(const LabelMatrix& labels, const HyperParams& hyper) {
  return fit(labels, hyper, initialize_posterior(labels));
}

FitResult fit(const LabelMatrix& labels, const HyperParams& hyper, Posterior initial) {
  validate(hyper);
  if (labels.num_labels() == 0) throw Error(ErrorCode::EmptyInput, "no observations to fit");
  FitResult result;
  result.posterior = std::move(initial);
  result.params = ConfusionParams::zeros(hyper.mode, labels.num_classes(),
                                         labels.num_workers(), labels.num_items());
  check_shapes(labels, result.posterior, result.params);
  result.unlabeled_items = count_unlabeled(labels);

  result.trace.push_back(
      {0, Phase::Init, dual_objective(labels, result.posterior, result.params, hyper)});
  for (int it = 1; it <= hyper.max_outer_iters; ++it) {
    MStepResult ms = m_step(labels, result.posterior, result.params, hyper);
    result.params = std::move(ms.params);
    result.line_search_failed = result.line_search_failed || ms.line_search_failed;
    const double after_m = dual_objective(labels, result.posterior, result.params, hyper);
    result.trace.push_back({it, Phase::MStep, after_m});

    Posterior next = e_step(labels, result.params, hyper.posterior_update);
    // An unchanged posterior contributes exactly nothing; otherwise take the
    // plain difference.
    const bool same = next == result.posterior;
    result.posterior = std::move(next);
    const double value = dual_objective(labels, result.posterior, result.params, hyper);
    result.trace.push_back({it, Phase::EStep, value});
    result.iterations = it;
    const double change = ms.improvement + (same ? 0.0 : value - after_m);
    if (std::abs(change) < hyper.tol * std::abs(value)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

double conditional_entropy(const LabelMatrix& labels, const Posterior& posterior,
                           const ConfusionParams& params) {
  check_shapes(labels, posterior, params);
  const int K = labels.num_classes();
  const DenseModel model(params);
  std::vector<double> logp(static_cast<std::size_t>(K));
  double h = 0.0;
  for (const auto& o : labels.observations()) {
    for (int c = 0; c < K; ++c) {
      const double q = posterior(o.item, static_cast<std::size_t>(c));
      if (q == 0.0) continue;
      model.log_probs(o, c, logp);
      double inner = 0.0;
      for (double lp : logp) inner += std::exp(lp) * lp;
      h -= q * inner;
    }
  }
  return h;
}

double kl_divergence_extended(const LabelMatrix& labels, const Posterior& deterministic,
                              const ConfusionParams& params) {
  const double n_log_k = static_cast<double>(labels.num_items()) *
                         std::log(static_cast<double>(labels.num_classes()));
  return -posterior_entropy(deterministic) -
         expected_log_likelihood(labels, deterministic, params) + n_log_k;
}

double kl_identity_check(const LabelMatrix& labels, const FitResult& fit) {
  const Posterior q = fit.posterior.rounded();
  const double n_log_k = static_cast<double>(labels.num_items()) *
                         std::log(static_cast<double>(labels.num_classes()));
  return std::abs(kl_divergence_extended(labels, q, fit.params) -
                  conditional_entropy(labels, q, fit.params) - n_log_k);
}

void write_trace(std::ostream& out, const std::vector<TracePoint>& trace) {
  out << "iter,phase,objective\n";
  char buf[64];
  for (const auto& t : trace) {
    std::snprintf(buf, sizeof buf, "%.12g", t.objective);
    out << t.iteration << ',' << to_string(t.phase) << ',' << buf << '\n';
  }
}

}  // namespace mmce
