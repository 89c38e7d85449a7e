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

// Block coordinate ascent on the regularized minimax-entropy dual
//
//   F(Q, sigma, tau) = sum_{j,c} Q(Y_j=c) sum_i log P(x_ij | c) + H(Q)
//                      - alpha * Omega(sigma) - beta * Psi(tau)
//
// alternating a gradient-ascent parameter block (m_step) with the exact
// Bayes-rule posterior block (e_step).

#ifndef MMCE_SOLVER_HPP_
#define MMCE_SOLVER_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmce/confusion_model.hpp"
#include "mmce/label_store.hpp"
#include "mmce/posterior.hpp"

namespace mmce {

/// How the posterior block is updated.
///   Soft: Q_j proportional to prod_i P(x_ij | c), the maximizer with the
///         entropy term.
///   Hard: one-hot at the argmax, the maximizer of the unregularized dual
///         whose optimal labels are deterministic.
enum class PosteriorUpdate { Soft, Hard };

struct LineSearch {
  double initial_step = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;
  int max_halvings = 50;
};

struct HyperParams {
  double alpha = 0.0;
  double beta = 0.0;
  LabelMode mode = LabelMode::Multiclass;
  RegularizerVariant variant = RegularizerVariant::Euclidean;
  int max_outer_iters = 200;
  int inner_gradient_steps = 5;
  double tol = 1e-6;
  LineSearch line_search;
  PosteriorUpdate posterior_update = PosteriorUpdate::Soft;
  // Holds item scores at zero; with alpha = 0 this is the Dawid-Skene model.
  bool clamp_item_params = false;
};

// Throws InvalidArgument for negative weights, non-positive tol, zero counts,
// or the centered variant in ordinal mode.
void validate(const HyperParams& hyper);

enum class Phase { Init, MStep, EStep };
const char* to_string(Phase phase) noexcept;

struct TracePoint {
  int iteration = 0;
  Phase phase = Phase::Init;
  double objective = 0.0;
};

struct FitResult {
  Posterior posterior;
  ConfusionParams params;
  std::vector<TracePoint> trace;
  bool converged = false;
  int iterations = 0;
  bool line_search_failed = false;
  std::size_t unlabeled_items = 0;

  std::vector<double> objective_values() const;
};

struct MStepResult {
  ConfusionParams params;
  int accepted_steps = 0;
  bool line_search_failed = false;
  // Sum of the accepted objective changes, accurate even below the
  // rounding level of the objective itself.
  double improvement = 0.0;
};

// Q(Y_j = c) proportional to the number of votes for c; uniform for items
// with no labels.
Posterior initialize_posterior(const LabelMatrix& labels);

Posterior e_step(const LabelMatrix& labels, const ConfusionParams& params,
                 PosteriorUpdate update = PosteriorUpdate::Soft);

// sum_{j,c} Q(Y_j=c) sum_i log P(x_ij | c); the data term of F.
double expected_log_likelihood(const LabelMatrix& labels,
                               const Posterior& posterior,
                               const ConfusionParams& params);

// H(Q) with 0 log 0 = 0.
double posterior_entropy(const Posterior& posterior);

double dual_objective(const LabelMatrix& labels, const Posterior& posterior,
                      const ConfusionParams& params, const HyperParams& hyper);

// Gradient of F with respect to the mode's parameters at fixed Q. Item
// gradients are zero when hyper.clamp_item_params is set.
ConfusionParams m_step_gradients(const LabelMatrix& labels,
                                 const Posterior& posterior,
                                 const ConfusionParams& params,
                                 const HyperParams& hyper);

// hyper.inner_gradient_steps ascent steps with Armijo backtracking. Never
// decreases F; on line-search failure the pending step is dropped and the
// flag is set.
MStepResult m_step(const LabelMatrix& labels, const Posterior& posterior,
                   const ConfusionParams& params, const HyperParams& hyper);

FitResult fit(const LabelMatrix& labels, const HyperParams& hyper);
// Same, starting from a caller-supplied posterior instead of vote counts.
FitResult fit(const LabelMatrix& labels, const HyperParams& hyper,
              Posterior initial);

// Conditional entropy of observed labels given the true labels, restricted
// to the observed (worker, item) pairs:
//   -sum_j sum_c Q(Y_j=c) sum_{i labels j} sum_k P(k|c) log P(k|c).
double conditional_entropy(const LabelMatrix& labels,
                           const Posterior& posterior,
                           const ConfusionParams& params);

// KL(Q || P) between the extended distributions on (X, Y): Q puts all mass on
// the observed labels and on the given (deterministic) true labels, P is the
// labeling model with a uniform prior on Y.
double kl_divergence_extended(const LabelMatrix& labels,
                              const Posterior& deterministic,
                              const ConfusionParams& params);

// |KL(Q||P) - H(X|Y) - n log K| with Q the rounded fit posterior. Vanishes
// when the fitted scores satisfy the moment-matching conditions for Q.
double kl_identity_check(const LabelMatrix& labels, const FitResult& fit);

// CSV `iter,phase,objective`.
void write_trace(std::ostream& out, const std::vector<TracePoint>& trace);

}  // namespace mmce

#endif  // MMCE_SOLVER_HPP_
