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

#ifndef MMCE_POSTERIOR_HPP_
#define MMCE_POSTERIOR_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace mmce {

/// Row-stochastic items x classes matrix of beliefs over each item's true
/// label.
class Posterior {
 public:
  Posterior() = default;
  Posterior(std::size_t num_items, std::size_t num_classes, double fill = 0.0)
      : num_items_(num_items), num_classes_(num_classes),
        values_(num_items * num_classes, fill) {}

  static Posterior uniform(std::size_t num_items, std::size_t num_classes);

  std::size_t num_items() const noexcept { return num_items_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  double& operator()(std::size_t item, std::size_t c) {
    return values_[item * num_classes_ + c];
  }
  double operator()(std::size_t item, std::size_t c) const {
    return values_[item * num_classes_ + c];
  }

  std::span<double> row(std::size_t item) {
    return {values_.data() + item * num_classes_, num_classes_};
  }
  std::span<const double> row(std::size_t item) const {
    return {values_.data() + item * num_classes_, num_classes_};
  }

  std::span<const double> flat() const noexcept { return values_; }

  // Lowest class index wins exact ties.
  int argmax(std::size_t item) const;
  double max_probability(std::size_t item) const;
  std::vector<int> hard_labels() const;

  // One-hot matrix at each row's argmax.
  Posterior rounded() const;

  // Largest |row sum - 1| over all rows.
  double max_normalization_error() const;

  bool operator==(const Posterior&) const = default;

 private:
  std::size_t num_items_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<double> values_;
};

}  // namespace mmce

#endif  // MMCE_POSTERIOR_HPP_
