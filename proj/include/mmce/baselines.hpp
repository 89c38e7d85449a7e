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

#ifndef MMCE_BASELINES_HPP_
#define MMCE_BASELINES_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mmce/label_store.hpp"
#include "mmce/posterior.hpp"
#include "mmce/tensor.hpp"

namespace mmce {

struct MajorityVoteResult {
  Posterior posterior;
  std::vector<int> labels;
  std::vector<bool> unlabeled;
};

MajorityVoteResult majority_vote(const LabelMatrix& labels);

/// Dawid-Skene parameters: a row-stochastic K x K confusion matrix per worker
/// and a class prior.
struct DSParams {
  Tensor3 confusion;
  std::vector<double> prior;
};

struct DSOptions {
  int max_iters = 200;
  double tol = 1e-6;
  // Pseudo-count added to every confusion cell in the M-step.
  double smoothing = 0.01;
  // Fix the class prior at uniform instead of re-estimating it.
  bool uniform_prior = false;
};

struct DSResult {
  Posterior posterior;
  DSParams params;
  // Marginal log-likelihood plus smoothing * sum log p after each M-step;
  // the plain marginal log-likelihood when smoothing is zero.
  std::vector<double> objective_trace;
  bool converged = false;
  int iterations = 0;
};

DSResult dawid_skene_em(const LabelMatrix& labels, const DSOptions& options = {});
DSResult dawid_skene_em(const LabelMatrix& labels, const DSOptions& options,
                        Posterior initial);

// One E-step: Q(Y_j=c) proportional to prior(c) * prod_i p_i(c, x_ij).
Posterior dawid_skene_posterior(const LabelMatrix& labels, const DSParams& params);

// sum_j log sum_c prior(c) prod_i p_i(c, x_ij).
double dawid_skene_log_likelihood(const LabelMatrix& labels, const DSParams& params);

// Tab-separated `kind\tentity\tc\tk\tvalue` lines, 9 decimals; the prior is
// written as kind `prior` with entity `-` and k = c.
void write_ds_params(std::ostream& out, const DSParams& params, const LabelMatrix& labels);

}  // namespace mmce

#endif  // MMCE_BASELINES_HPP_
