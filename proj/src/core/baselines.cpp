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

#include "mmce/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>

#include "mmce/error.hpp"
#include "mmce/solver.hpp"

namespace mmce {
namespace {

// log prior(c) + sum_i log p_i(c, x_ij) for every class.
void item_scores(const LabelMatrix& labels, const DSParams& params, std::size_t item,
                 std::vector<double>& score) {
  const auto K = static_cast<std::size_t>(labels.num_classes());
  const auto& obs = labels.observations();
  for (std::size_t c = 0; c < K; ++c) score[c] = std::log(params.prior[c]);
  for (std::size_t n : labels.item_observations(item)) {
    const auto x = static_cast<std::size_t>(obs[n].label);
    for (std::size_t c = 0; c < K; ++c) {
      score[c] += std::log(params.confusion(obs[n].worker, c, x));
    }
  }
}

double log_sum_exp(const std::vector<double>& v) {
  const double peak = *std::max_element(v.begin(), v.end());
  if (peak == -INFINITY) return -INFINITY;
  double z = 0.0;
  for (double x : v) z += std::exp(x - peak);
  return peak + std::log(z);
}

DSParams maximize(const LabelMatrix& labels, const Posterior& q, const DSOptions& options) {
  const auto K = static_cast<std::size_t>(labels.num_classes());
  DSParams p{Tensor3(labels.num_workers(), K, K, 0.0), std::vector<double>(K, 0.0)};
  for (const auto& o : labels.observations()) {
    for (std::size_t c = 0; c < K; ++c) {
      p.confusion(o.worker, c, static_cast<std::size_t>(o.label)) += q(o.item, c);
    }
  }
  for (std::size_t i = 0; i < labels.num_workers(); ++i) {
    for (std::size_t c = 0; c < K; ++c) {
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        p.confusion(i, c, k) += options.smoothing;
        total += p.confusion(i, c, k);
      }
      for (std::size_t k = 0; k < K; ++k) {
        // A row with no evidence and no smoothing carries no information.
        p.confusion(i, c, k) = total > 0.0 ? p.confusion(i, c, k) / total
                                           : 1.0 / static_cast<double>(K);
      }
    }
  }
  if (options.uniform_prior) {
    std::fill(p.prior.begin(), p.prior.end(), 1.0 / static_cast<double>(K));
  } else {
    for (std::size_t j = 0; j < labels.num_items(); ++j) {
      for (std::size_t c = 0; c < K; ++c) p.prior[c] += q(j, c);
    }
    const double n = static_cast<double>(labels.num_items());
    for (double& v : p.prior) v /= n;
  }
  return p;
}

double smoothing_term(const DSParams& params, double smoothing) {
  if (smoothing == 0.0) return 0.0;
  double total = 0.0;
  for (double v : params.confusion.flat()) total += std::log(v);
  return smoothing * total;
}

}  // namespace

MajorityVoteResult majority_vote(const LabelMatrix& labels) {
  MajorityVoteResult r;
  r.posterior = initialize_posterior(labels);
  r.labels = r.posterior.hard_labels();
  r.unlabeled.resize(labels.num_items());
  for (std::size_t j = 0; j < labels.num_items(); ++j) {
    r.unlabeled[j] = labels.item_observations(j).empty();
  }
  return r;
}

Posterior dawid_skene_posterior(const LabelMatrix& labels, const DSParams& params) {
  const auto K = static_cast<std::size_t>(labels.num_classes());
  Posterior q(labels.num_items(), K, 0.0);
  std::vector<double> score(K);
  for (std::size_t j = 0; j < labels.num_items(); ++j) {
    item_scores(labels, params, j, score);
    const double log_z = log_sum_exp(score);
    auto row = q.row(j);
    if (!std::isfinite(log_z)) {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(K));
      continue;
    }
    for (std::size_t c = 0; c < K; ++c) row[c] = std::exp(score[c] - log_z);
  }
  return q;
}

double dawid_skene_log_likelihood(const LabelMatrix& labels, const DSParams& params) {
  std::vector<double> score(static_cast<std::size_t>(labels.num_classes()));
  double total = 0.0;
  for (std::size_t j = 0; j < labels.num_items(); ++j) {
    item_scores(labels, params, j, score);
    total += log_sum_exp(score);
  }
  return total;
}

DSResult dawid_skene_em(const LabelMatrix& labels, const DSOptions& options) {
  return dawid_skene_em(labels, options, majority_vote(labels).posterior);
}

DSResult dawid_skene_em(const LabelMatrix& labels, const DSOptions& options,
                        Posterior initial) {
  if (!(options.smoothing >= 0.0) || !(options.tol > 0.0) || options.max_iters < 1) {
    throw Error(ErrorCode::InvalidArgument, "invalid Dawid-Skene options");
  }
  if (initial.num_items() != labels.num_items() ||
      initial.num_classes() != static_cast<std::size_t>(labels.num_classes())) {
    throw Error(ErrorCode::DimensionMismatch, "initial posterior shape mismatch");
  }
  DSResult r;
  r.posterior = std::move(initial);
  double previous = 0.0;
  for (int it = 1; it <= options.max_iters; ++it) {
    r.params = maximize(labels, r.posterior, options);
    const double value = dawid_skene_log_likelihood(labels, r.params) +
                         smoothing_term(r.params, options.smoothing);
    r.objective_trace.push_back(value);
    r.posterior = dawid_skene_posterior(labels, r.params);
    r.iterations = it;
    if (it > 1 && std::abs(value - previous) < options.tol * std::abs(value)) {
      r.converged = true;
      break;
    }
    previous = value;
  }
  return r;
}

void write_ds_params(std::ostream& out, const DSParams& params, const LabelMatrix& labels) {
  out << "kind\tentity\tc\tk\tvalue\n";
  char buf[64];
  const auto& t = params.confusion;
  for (std::size_t i = 0; i < t.entities(); ++i) {
    for (std::size_t c = 0; c < t.rows(); ++c) {
      for (std::size_t k = 0; k < t.cols(); ++k) {
        std::snprintf(buf, sizeof buf, "%.9f", t(i, c, k));
        out << "worker\t" << labels.worker_ids().name(i) << '\t' << c << '\t' << k << '\t'
            << buf << '\n';
      }
    }
  }
  for (std::size_t c = 0; c < params.prior.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%.9f", params.prior[c]);
    out << "prior\t-\t" << c << '\t' << c << '\t' << buf << '\n';
  }
}

}  // namespace mmce
