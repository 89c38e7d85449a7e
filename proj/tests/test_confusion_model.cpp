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

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mmce/confusion_model.hpp"
#include "mmce/error.hpp"
#include "support/oracles.hpp"

using namespace mmce;

namespace {

Tensor3 random_tensor(std::mt19937_64& rng, std::size_t e, std::size_t r, std::size_t c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor3 t(e, r, c);
  for (auto& v : t.flat()) v = g(rng);
  return t;
}

std::vector<double> row_dist(const Tensor3& sigma, const Tensor3& tau, int K, int c) {
  return label_distribution(sigma.slice(0), tau.slice(0), K, c);
}

}  // namespace

TEST_SUITE("confusion_model") {

TEST_CASE("K=2 ordinal scores fill a full 2x2 matrix") {
  Tensor3 ord(1, 1, 4);
  ord(0, 0, static_cast<std::size_t>(Relation::GeGe)) = 1.0;
  ord(0, 0, static_cast<std::size_t>(Relation::GeLt)) = 2.0;
  ord(0, 0, static_cast<std::size_t>(Relation::LtGe)) = 3.0;
  ord(0, 0, static_cast<std::size_t>(Relation::LtLt)) = 4.0;
  const auto d = expand_ordinal(ord, 2);
  CHECK(d(0, 0, 0) == 4.0);  // (<,<)
  CHECK(d(0, 0, 1) == 3.0);  // (<,>=)
  CHECK(d(0, 1, 0) == 2.0);  // (>=,<)
  CHECK(d(0, 1, 1) == 1.0);  // (>=,>=)
}

TEST_CASE("K=4 threshold 2 contributes only its lt_ge score at cell (1,2)") {
  for (Relation r : {Relation::GeGe, Relation::GeLt, Relation::LtGe, Relation::LtLt}) {
    Tensor3 ord(1, 3, 4);
    ord(0, 1, static_cast<std::size_t>(r)) = 1.0;  // threshold s = 2
    const double cell = expand_ordinal(ord, 4)(0, 1, 2);
    CHECK(cell == (r == Relation::LtGe ? 1.0 : 0.0));
  }
  CHECK(relation_holds(Relation::LtGe, 2, 1, 2));
  CHECK_FALSE(relation_holds(Relation::GeGe, 2, 1, 2));
}

TEST_CASE("zero ordinal scores expand to zeros") {
  const auto d = expand_ordinal(Tensor3(3, 4, 4), 5);
  CHECK(d.rows() == 5);
  CHECK(d.squared_norm() == 0.0);
}

TEST_CASE("expansion matches the indicator sum and collapse is its adjoint") {
  std::mt19937_64 rng(11);
  for (int K = 2; K <= 5; ++K) {
    const auto Ku = static_cast<std::size_t>(K);
    auto a = random_tensor(rng, 2, Ku - 1, 4);
    auto b = random_tensor(rng, 2, Ku, Ku);
    const auto dense = expand_ordinal(a, K);
    for (std::size_t e = 0; e < 2; ++e) {
      for (int c = 0; c < K; ++c) {
        for (int k = 0; k < K; ++k) {
          CHECK(dense(e, static_cast<std::size_t>(c), static_cast<std::size_t>(k)) ==
                doctest::Approx(static_cast<double>(
                    oracle::dense_score(a, LabelMode::Ordinal, K, e, c, k))));
        }
      }
    }
    CHECK(dense.dot(b) == doctest::Approx(a.dot(collapse_to_ordinal(b, K))));
  }
}

TEST_CASE("expansion rejects the wrong shape") {
  CHECK_THROWS_AS(expand_ordinal(Tensor3(1, 3, 4), 3), Error);
  CHECK_THROWS_AS(collapse_to_ordinal(Tensor3(1, 3, 2), 3), Error);
}

TEST_CASE("zero scores give the uniform distribution") {
  Tensor3 z(1, 4, 4);
  for (int c = 0; c < 4; ++c) {
    for (double p : row_dist(z, z, 4, c)) CHECK(p == doctest::Approx(0.25));
  }
}

TEST_CASE("closed-form two-class softmax") {
  Tensor3 sigma(1, 2, 2), tau(1, 2, 2);
  sigma(0, 0, 0) = std::log(2.0);
  const auto p = row_dist(sigma, tau, 2, 0);
  CHECK(p[0] == doctest::Approx(2.0 / 3.0));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("distribution matches the unshifted long double evaluation") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto params = oracle::random_params(rng, LabelMode::Multiclass, 3, 1, 1, 3.0);
    for (int c = 0; c < 3; ++c) {
      const auto p = row_dist(params.workers, params.items, 3, c);
      double total = 0.0;
      for (int k = 0; k < 3; ++k) {
        CHECK(p[static_cast<std::size_t>(k)] > 0.0);
        CHECK(std::abs(p[static_cast<std::size_t>(k)] -
                       static_cast<double>(oracle::prob(params, 0, 0, c, k))) < 1e-14);
        total += p[static_cast<std::size_t>(k)];
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("huge scores do not overflow") {
  Tensor3 sigma(1, 2, 2), tau(1, 2, 2);
  sigma(0, 0, 0) = 1000.0;
  sigma(0, 0, 1) = 999.0;
  const auto p = row_dist(sigma, tau, 2, 0);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(std::isfinite(p[1]));
}

TEST_CASE("adding a constant to a row leaves that row's distribution unchanged") {
  std::mt19937_64 rng(5);
  auto sigma = random_tensor(rng, 1, 4, 4), tau = random_tensor(rng, 1, 4, 4);
  const auto before = row_dist(sigma, tau, 4, 2);
  for (std::size_t k = 0; k < 4; ++k) {
    sigma(0, 2, k) += 3.7;
    tau(0, 2, k) -= 1.1;
  }
  const auto after = row_dist(sigma, tau, 4, 2);
  for (std::size_t k = 0; k < 4; ++k) CHECK(after[k] == doctest::Approx(before[k]).epsilon(1e-12));
}

TEST_CASE("double ratio is the same for every worker") {
  // [P_ij(k|c) / P_ij(c|c)] * [P_ij'(c|c) / P_ij'(k|c)] depends on j, j' only.
  std::mt19937_64 rng(9);
  const int K = 4;
  for (int trial = 0; trial < 10; ++trial) {
    auto p = oracle::random_params(rng, LabelMode::Multiclass, K, 3, 2);
    auto sigma = p.dense_workers(), tau = p.dense_items();
    auto P = [&](std::size_t i, std::size_t j, int c, int k) {
      return label_distribution(sigma.slice(i), tau.slice(j), K, c)[static_cast<std::size_t>(k)];
    };
    for (int c = 0; c < K; ++c) {
      for (int k = 0; k < K; ++k) {
        auto ratio = [&](std::size_t i) {
          return P(i, 0, c, k) / P(i, 0, c, c) * (P(i, 1, c, c) / P(i, 1, c, k));
        };
        const double r0 = ratio(0);
        CHECK(std::abs(ratio(1) - r0) / r0 < 1e-10);
        CHECK(std::abs(ratio(2) - r0) / r0 < 1e-10);
      }
    }
  }
}

TEST_CASE("regularizers vanish at zero") {
  for (auto v : {RegularizerVariant::Euclidean, RegularizerVariant::Centered}) {
    auto t = regularizer(Tensor3(2, 3, 3), LabelMode::Multiclass, v, 2.0);
    CHECK(t.value == 0.0);
    CHECK(t.gradient.squared_norm() == 0.0);
  }
}

TEST_CASE("centered regularizer is zero on scaled identities") {
  Tensor3 t(2, 3, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    t(0, c, c) = 2.5;
    t(1, c, c) = -1.0;
  }
  CHECK(regularizer(t, LabelMode::Multiclass, RegularizerVariant::Centered, 4.0).value ==
        doctest::Approx(0.0));
  CHECK(regularizer(t, LabelMode::Multiclass, RegularizerVariant::Euclidean, 4.0).value ==
        doctest::Approx(2.0 * (3 * 6.25 + 3 * 1.0)));
}

TEST_CASE("regularizer values match the direct formulas") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto t = random_tensor(rng, 2, 3, 3);
    CHECK(regularizer(t, LabelMode::Multiclass, RegularizerVariant::Centered, 1.5).value ==
          doctest::Approx(static_cast<double>(oracle::centered(t, 1.5))));
    CHECK(regularizer(t, LabelMode::Multiclass, RegularizerVariant::Euclidean, 1.5).value ==
          doctest::Approx(static_cast<double>(oracle::euclidean(t, 1.5))));
  }
}

TEST_CASE("regularizer gradients match central differences") {
  std::mt19937_64 rng(23);
  const double h = 1e-5;
  for (auto v : {RegularizerVariant::Euclidean, RegularizerVariant::Centered}) {
    auto t = random_tensor(rng, 2, 3, 3);
    const auto g = regularizer(t, LabelMode::Multiclass, v, 0.7).gradient;
    for (std::size_t n = 0; n < t.size(); ++n) {
      const double x = t.flat()[n];
      t.flat()[n] = x + h;
      const double up = regularizer(t, LabelMode::Multiclass, v, 0.7).value;
      t.flat()[n] = x - h;
      const double down = regularizer(t, LabelMode::Multiclass, v, 0.7).value;
      t.flat()[n] = x;
      CHECK(oracle::relative_error(g.flat()[n], (up - down) / (2 * h)) < 1e-6);
    }
  }
}

TEST_CASE("centered variant is multiclass only; weights must be non-negative") {
  CHECK_THROWS_AS(regularizer(Tensor3(1, 2, 4), LabelMode::Ordinal, RegularizerVariant::Centered, 1.0),
                  Error);
  CHECK_THROWS_AS(regularizer(Tensor3(1, 2, 2), LabelMode::Multiclass,
                              RegularizerVariant::Euclidean, -1.0),
                  Error);
}

TEST_CASE("mode and variant names") {
  CHECK(parse_label_mode("ordinal") == LabelMode::Ordinal);
  CHECK(parse_regularizer_variant("centered") == RegularizerVariant::Centered);
  CHECK(std::string(to_string(LabelMode::Multiclass)) == "multiclass");
  CHECK_THROWS_AS(parse_label_mode("binary"), Error);
}

TEST_CASE("parameter sidecar round trip") {
  std::mt19937_64 rng(31);
  const auto labels = oracle::three_worker_table();
  for (auto mode : {LabelMode::Multiclass, LabelMode::Ordinal}) {
    auto p = oracle::random_params(rng, mode, 3, 3, 6);
    std::ostringstream out;
    write_params(out, p, labels, {2.0, 0.5, RegularizerVariant::Euclidean});
    std::istringstream in(out.str());
    ParamsHeader header;
    auto back = parse_params(in, labels, &header);
    CHECK(back.mode == mode);
    CHECK(header.alpha == 2.0);
    CHECK(header.beta == 0.5);
    for (std::size_t n = 0; n < p.workers.size(); ++n) {
      CHECK(std::abs(back.workers.flat()[n] - p.workers.flat()[n]) < 1e-9);
    }
    for (std::size_t n = 0; n < p.items.size(); ++n) {
      CHECK(std::abs(back.items.flat()[n] - p.items.flat()[n]) < 1e-9);
    }
  }
}

}  // TEST_SUITE
