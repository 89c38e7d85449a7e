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

// Reference computations for the tests. Nothing here calls into the library's
// numerical code: probabilities, objectives and regularizers are re-derived
// from their definitions in long double, straight from the formulas, with no
// max-shifting and no shared helpers.

#ifndef MMCE_TESTS_SUPPORT_ORACLES_HPP_
#define MMCE_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mmce/confusion_model.hpp"
#include "mmce/label_store.hpp"
#include "mmce/posterior.hpp"
#include "mmce/solver.hpp"

namespace oracle {

using ld = long double;
using mmce::ConfusionParams;
using mmce::LabelMatrix;
using mmce::Posterior;

inline LabelMatrix from_triples(int K, const std::vector<std::tuple<std::string, std::string, int>>& rows) {
  mmce::IdMap workers, items;
  std::vector<mmce::Observation> obs;
  for (const auto& [w, j, x] : rows) obs.push_back({workers.intern(w), items.intern(j), x});
  return LabelMatrix(K, std::move(workers), std::move(items), std::move(obs));
}

// The three-worker, six-item table used throughout the docs, labels 0-based.
inline LabelMatrix three_worker_table() {
  const int table[3][6] = {{1, 2, 2, 1, 3, 2}, {2, 1, 2, 2, 1, 3}, {1, 1, 1, 2, 2, 3}};
  std::vector<std::tuple<std::string, std::string, int>> rows;
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < 3; ++i) {
      rows.emplace_back("w" + std::to_string(i + 1), "i" + std::to_string(j + 1), table[i][j] - 1);
    }
  }
  return from_triples(3, rows);
}

// Every (worker, item) pair is observed independently with probability
// `density`; every item and every worker gets at least one label.
inline LabelMatrix random_labels(std::mt19937_64& rng, std::size_t m, std::size_t n, int K,
                                 double density = 0.7) {
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<int> label(0, K - 1);
  std::uniform_int_distribution<std::size_t> pick_worker(0, m - 1);
  std::vector<std::vector<bool>> seen(m, std::vector<bool>(n, false));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) seen[i][j] = keep(rng);
    seen[pick_worker(rng)][j] = true;
  }
  for (std::size_t i = 0; i < m; ++i) seen[i][i % n] = true;
  mmce::IdMap workers, items;
  for (std::size_t i = 0; i < m; ++i) workers.intern("w" + std::to_string(i));
  for (std::size_t j = 0; j < n; ++j) items.intern("i" + std::to_string(j));
  std::vector<mmce::Observation> obs;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      if (seen[i][j]) obs.push_back({i, j, label(rng)});
    }
  }
  return LabelMatrix(K, std::move(workers), std::move(items), std::move(obs));
}

struct Planted {
  LabelMatrix labels;
  mmce::GoldLabels gold;
  std::vector<int> truth;
};

// Homogeneous workers: correct with probability `accuracy`, otherwise a
// uniformly random wrong class. Each item is labeled by `per_item` distinct
// random workers.
inline Planted planted(std::uint64_t seed, int K, std::size_t m, std::size_t n,
                       std::size_t per_item, double accuracy) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cls(0, K - 1), wrong(1, K - 1);
  std::bernoulli_distribution correct(accuracy);
  mmce::IdMap workers, items;
  for (std::size_t i = 0; i < m; ++i) workers.intern("w" + std::to_string(i));
  for (std::size_t j = 0; j < n; ++j) items.intern("i" + std::to_string(j));
  std::vector<int> truth(n);
  std::vector<mmce::Observation> obs;
  std::vector<std::size_t> pool(m);
  for (std::size_t j = 0; j < n; ++j) {
    truth[j] = cls(rng);
    for (std::size_t i = 0; i < m; ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<long>(per_item));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) {
      const int x = correct(rng) ? truth[j] : (truth[j] + wrong(rng)) % K;
      obs.push_back({i, j, x});
    }
  }
  mmce::GoldLabels gold(K);
  for (std::size_t j = 0; j < n; ++j) gold.set(j, truth[j]);
  return {LabelMatrix(K, std::move(workers), std::move(items), std::move(obs)), std::move(gold),
          std::move(truth)};
}

// Like `planted`, but each worker has its own confusion matrix: diagonal
// `accuracy`, and the rest of every row split over the wrong classes by a
// flat Dirichlet draw.
inline Planted planted_confusions(std::uint64_t seed, int K, std::size_t m, std::size_t n,
                                  std::size_t per_item, double accuracy) {
  std::mt19937_64 rng(seed);
  const auto Ku = static_cast<std::size_t>(K);
  std::gamma_distribution<double> flat(1.0, 1.0);
  std::vector<std::discrete_distribution<int>> rows;
  for (std::size_t i = 0; i < m * Ku; ++i) {
    const std::size_t c = i % Ku;
    std::vector<double> w(Ku);
    double total = 0.0;
    for (std::size_t k = 0; k < Ku; ++k) total += w[k] = k == c ? 0.0 : flat(rng);
    for (std::size_t k = 0; k < Ku; ++k) w[k] = k == c ? accuracy : (1.0 - accuracy) * w[k] / total;
    rows.emplace_back(w.begin(), w.end());
  }
  std::uniform_int_distribution<int> cls(0, K - 1);
  mmce::IdMap workers, items;
  for (std::size_t i = 0; i < m; ++i) workers.intern("w" + std::to_string(i));
  for (std::size_t j = 0; j < n; ++j) items.intern("i" + std::to_string(j));
  std::vector<int> truth(n);
  std::vector<mmce::Observation> obs;
  std::vector<std::size_t> pool(m);
  for (std::size_t j = 0; j < n; ++j) {
    truth[j] = cls(rng);
    for (std::size_t i = 0; i < m; ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<long>(per_item));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) {
      obs.push_back({i, j, rows[i * Ku + static_cast<std::size_t>(truth[j])](rng)});
    }
  }
  mmce::GoldLabels gold(K);
  for (std::size_t j = 0; j < n; ++j) gold.set(j, truth[j]);
  return {LabelMatrix(K, std::move(workers), std::move(items), std::move(obs)), std::move(gold),
          std::move(truth)};
}

// Every worker labels every item, and each worker (per true class) and, when
// `items_too`, each item uses every label at least once. Without that, the
// unregularized likelihood has no finite maximizer. Redraws until the
// coverage holds.
inline Planted mixed_planted(std::uint64_t seed, int K, std::size_t m, std::size_t n,
                             double accuracy, bool items_too = true) {
  for (std::uint64_t s = seed;; s += 1000003) {
    auto data = planted(s, K, m, n, m, accuracy);
    const auto Ku = static_cast<std::size_t>(K);
    std::vector<std::vector<bool>> item_seen(n, std::vector<bool>(Ku, false));
    std::vector<std::vector<bool>> worker_seen(m * Ku, std::vector<bool>(Ku, false));
    for (const auto& o : data.labels.observations()) {
      const auto k = static_cast<std::size_t>(o.label);
      item_seen[o.item][k] = true;
      worker_seen[o.worker * Ku + static_cast<std::size_t>(data.truth[o.item])][k] = true;
    }
    auto full = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
    bool ok = !items_too || std::all_of(item_seen.begin(), item_seen.end(), full);
    for (std::size_t r = 0; ok && r < worker_seen.size(); ++r) {
      // Classes nobody has are fine; their rows get no gradient.
      if (std::none_of(worker_seen[r].begin(), worker_seen[r].end(), [](bool b) { return b; })) continue;
      ok = full(worker_seen[r]);
    }
    if (ok) return data;
  }
}

inline ConfusionParams random_params(std::mt19937_64& rng, mmce::LabelMode mode, int K,
                                     std::size_t m, std::size_t n, double scale = 1.0) {
  auto p = ConfusionParams::zeros(mode, K, m, n);
  std::normal_distribution<double> g(0.0, scale);
  for (auto& v : p.workers.flat()) v = g(rng);
  for (auto& v : p.items.flat()) v = g(rng);
  return p;
}

inline Posterior random_posterior(std::mt19937_64& rng, std::size_t n, int K) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Posterior q(n, static_cast<std::size_t>(K));
  for (std::size_t j = 0; j < n; ++j) {
    double total = 0.0;
    for (int c = 0; c < K; ++c) total += q(j, static_cast<std::size_t>(c)) = u(rng);
    for (int c = 0; c < K; ++c) q(j, static_cast<std::size_t>(c)) /= total;
  }
  return q;
}

// Dense score sigma(c, k) straight from the threshold indicators.
inline ld dense_score(const mmce::Tensor3& t, mmce::LabelMode mode, int K, std::size_t e, int c,
                      int k) {
  if (mode == mmce::LabelMode::Multiclass) {
    return t(e, static_cast<std::size_t>(c), static_cast<std::size_t>(k));
  }
  ld total = 0;
  for (int s = 1; s < K; ++s) {
    const auto row = static_cast<std::size_t>(s - 1);
    if (c >= s && k >= s) total += t(e, row, 0);
    if (c >= s && k < s) total += t(e, row, 1);
    if (c < s && k >= s) total += t(e, row, 2);
    if (c < s && k < s) total += t(e, row, 3);
  }
  return total;
}

// P(X = k | Y = c) for one (worker, item) pair, unshifted exponentials.
inline ld prob(const ConfusionParams& p, std::size_t worker, std::size_t item, int c, int k) {
  const int K = p.num_classes;
  ld z = 0;
  for (int kk = 0; kk < K; ++kk) {
    z += std::exp(dense_score(p.workers, p.mode, K, worker, c, kk) +
                  dense_score(p.items, p.mode, K, item, c, kk));
  }
  return std::exp(dense_score(p.workers, p.mode, K, worker, c, k) +
                  dense_score(p.items, p.mode, K, item, c, k)) /
         z;
}

inline ld euclidean(const mmce::Tensor3& t, double weight) {
  ld total = 0;
  for (double v : t.flat()) total += static_cast<ld>(v) * v;
  return weight * total / 2;
}

// Per worker: squared deviations of diagonal entries from the diagonal mean
// plus off-diagonal entries from the off-diagonal mean.
inline ld centered(const mmce::Tensor3& t, double weight) {
  const std::size_t K = t.rows();
  ld total = 0;
  for (std::size_t e = 0; e < t.entities(); ++e) {
    ld diag = 0, off = 0;
    for (std::size_t c = 0; c < K; ++c) {
      for (std::size_t k = 0; k < K; ++k) (c == k ? diag : off) += t(e, c, k);
    }
    diag /= K;
    off /= K * (K - 1);
    for (std::size_t c = 0; c < K; ++c) {
      for (std::size_t k = 0; k < K; ++k) {
        const ld d = t(e, c, k) - (c == k ? diag : off);
        total += d * d;
      }
    }
  }
  return weight * total / 2;
}

inline ld expected_log_likelihood(const LabelMatrix& labels, const Posterior& q,
                                  const ConfusionParams& p) {
  ld total = 0;
  for (const auto& o : labels.observations()) {
    for (int c = 0; c < labels.num_classes(); ++c) {
      const ld w = q(o.item, static_cast<std::size_t>(c));
      if (w != 0) total += w * std::log(prob(p, o.worker, o.item, c, o.label));
    }
  }
  return total;
}

inline ld entropy(const Posterior& q) {
  ld h = 0;
  for (double v : q.flat()) {
    if (v > 0) h -= static_cast<ld>(v) * std::log(static_cast<ld>(v));
  }
  return h;
}

// The regularized dual, term by term.
inline ld objective(const LabelMatrix& labels, const Posterior& q, const ConfusionParams& p,
                    const mmce::HyperParams& h) {
  const ld omega = h.variant == mmce::RegularizerVariant::Centered ? centered(p.workers, h.alpha)
                                                                   : euclidean(p.workers, h.alpha);
  const ld psi = h.clamp_item_params ? 0 : euclidean(p.items, h.beta);
  return oracle::expected_log_likelihood(labels, q, p) + oracle::entropy(q) - omega - psi;
}

// Central differences of `objective` in every parameter.
inline ConfusionParams finite_difference(const LabelMatrix& labels, const Posterior& q,
                                         const ConfusionParams& p, const mmce::HyperParams& h,
                                         double step = 1e-5) {
  ConfusionParams grad = p;
  ConfusionParams probe = p;
  auto sweep = [&](auto member) {
    auto src = (p.*member).flat();
    auto dst = (grad.*member).flat();
    auto var = (probe.*member).flat();
    for (std::size_t n = 0; n < src.size(); ++n) {
      var[n] = src[n] + step;
      const ld up = oracle::objective(labels, q, probe, h);
      var[n] = src[n] - step;
      const ld down = oracle::objective(labels, q, probe, h);
      var[n] = src[n];
      dst[n] = static_cast<double>((up - down) / (2 * static_cast<ld>(step)));
    }
  };
  sweep(&ConfusionParams::workers);
  sweep(&ConfusionParams::items);
  if (h.clamp_item_params) {
    for (auto& v : grad.items.flat()) v = 0.0;
  }
  return grad;
}

// Bayes rule with a uniform prior: Q(c) proportional to prod_i P(x_ij | c).
inline Posterior bayes_posterior(const LabelMatrix& labels, const ConfusionParams& p) {
  const int K = labels.num_classes();
  std::vector<std::vector<ld>> w(labels.num_items(), std::vector<ld>(static_cast<std::size_t>(K), 1));
  for (const auto& o : labels.observations()) {
    for (int c = 0; c < K; ++c) w[o.item][static_cast<std::size_t>(c)] *= prob(p, o.worker, o.item, c, o.label);
  }
  Posterior q(labels.num_items(), static_cast<std::size_t>(K));
  for (std::size_t j = 0; j < labels.num_items(); ++j) {
    ld z = 0;
    for (ld v : w[j]) z += v;
    for (int c = 0; c < K; ++c) {
      q(j, static_cast<std::size_t>(c)) = static_cast<double>(w[j][static_cast<std::size_t>(c)] / z);
    }
  }
  return q;
}

// |a - b| / max(1, |a|, |b|)
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double max_relative_error(const ConfusionParams& a, const ConfusionParams& b) {
  double worst = 0.0;
  auto scan = [&](std::span<const double> x, std::span<const double> y) {
    for (std::size_t n = 0; n < x.size(); ++n) worst = std::max(worst, relative_error(x[n], y[n]));
  };
  scan(a.workers.flat(), b.workers.flat());
  scan(a.items.flat(), b.items.flat());
  return worst;
}

inline double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth) {
  std::size_t wrong = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) wrong += predicted[j] != truth[j];
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

}  // namespace oracle

#endif  // MMCE_TESTS_SUPPORT_ORACLES_HPP_
