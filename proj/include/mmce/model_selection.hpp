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

// Choosing the regularization strengths. A single scale gamma fixes both:
//   alpha = gamma * K^2,  beta = (labels per worker / labels per item) * alpha
// and gamma is picked from a small grid by k-fold held-out likelihood or,
// when some true labels are known, by validation error.

#ifndef MMCE_MODEL_SELECTION_HPP_
#define MMCE_MODEL_SELECTION_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmce/label_store.hpp"
#include "mmce/solver.hpp"

namespace mmce {

struct RegularizationWeights {
  double alpha = 0.0;
  double beta = 0.0;
};

RegularizationWeights resolve_hyperparams(double gamma, const LabelMatrix& labels);

enum class HeldOutScoring {
  // log sum_c Q_train(Y_j=c) P(x_ij | c)
  Marginal,
  // log P(x_ij | argmax_c Q_train(Y_j=c))
  PointEstimate,
};

struct CVConfig {
  int folds = 5;
  std::vector<double> gamma_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::uint64_t seed = 42;
  // mode, variant and solver controls; alpha/beta are overwritten per gamma.
  HyperParams base;
  HeldOutScoring scoring = HeldOutScoring::Marginal;
  // Concurrent (gamma, fold) fits; results do not depend on it.
  int threads = 1;
};

struct CVReport {
  std::vector<double> gammas;
  // fold_loglik[g][f]: held-out log-likelihood of fold f under gamma g.
  std::vector<std::vector<double>> fold_loglik;
  std::vector<double> mean_loglik;
  std::size_t selected = 0;
  double selected_gamma = 0.0;
  RegularizationWeights weights;
};

// fold[n] in [0, folds) for each observation n: a seeded shuffle dealt
// round-robin, so fold sizes differ by at most one.
std::vector<int> assign_folds(std::size_t num_labels, int folds, std::uint64_t seed);

// Held-out log-likelihood of `held_out` observations under a fit on `train`
// (both share ID maps).
double held_out_log_likelihood(const LabelMatrix& train, const FitResult& fit,
                               const LabelMatrix& held_out, HeldOutScoring scoring);

CVReport cross_validate(const LabelMatrix& labels, const CVConfig& config);

struct ValidationReport {
  std::vector<double> gammas;
  std::string metric;  // "error_rate" or "mse"
  std::vector<double> metric_values;
  std::size_t selected = 0;
  double selected_gamma = 0.0;
  RegularizationWeights weights;
};

ValidationReport validation_select(const LabelMatrix& labels, const GoldLabels& gold,
                                   const CVConfig& config);

// CSV `gamma,fold,heldout_loglik`, then one `gamma,mean,value` row per grid
// point and a trailing `# selected ...` summary line.
void write_cv_report(std::ostream& out, const CVReport& report);
void write_validation_report(std::ostream& out, const ValidationReport& report);

}  // namespace mmce

#endif  // MMCE_MODEL_SELECTION_HPP_
