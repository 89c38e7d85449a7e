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

#include "mmce/posterior.hpp"

#include <algorithm>
#include <cmath>

namespace mmce {

Posterior Posterior::uniform(std::size_t num_items, std::size_t num_classes) {
  return Posterior(num_items, num_classes,
                   num_classes == 0 ? 0.0 : 1.0 / static_cast<double>(num_classes));
}

int Posterior::argmax(std::size_t item) const {
  auto r = row(item);
  int best = 0;
  for (std::size_t c = 1; c < r.size(); ++c) {
    if (r[c] > r[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

double Posterior::max_probability(std::size_t item) const {
  auto r = row(item);
  return r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
}

std::vector<int> Posterior::hard_labels() const {
  std::vector<int> labels(num_items_);
  for (std::size_t j = 0; j < num_items_; ++j) labels[j] = argmax(j);
  return labels;
}

Posterior Posterior::rounded() const {
  Posterior out(num_items_, num_classes_, 0.0);
  for (std::size_t j = 0; j < num_items_; ++j) {
    out(j, static_cast<std::size_t>(argmax(j))) = 1.0;
  }
  return out;
}

double Posterior::max_normalization_error() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < num_items_; ++j) {
    double total = 0.0;
    for (double v : row(j)) total += v;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

}  // namespace mmce
