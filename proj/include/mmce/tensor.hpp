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

#ifndef MMCE_TENSOR_HPP_
#define MMCE_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace mmce {

/// Dense row-major (entity, row, col) tensor. Confusion scores, empirical
/// counts and gradients all share this layout.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t entities, std::size_t rows, std::size_t cols,
          double fill = 0.0)
      : entities_(entities), rows_(rows), cols_(cols),
        values_(entities * rows * cols, fill) {}

  std::size_t entities() const noexcept { return entities_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t e, std::size_t r, std::size_t c) {
    return values_[(e * rows_ + r) * cols_ + c];
  }
  double operator()(std::size_t e, std::size_t r, std::size_t c) const {
    return values_[(e * rows_ + r) * cols_ + c];
  }

  std::span<double> slice(std::size_t e) {
    return {values_.data() + e * rows_ * cols_, rows_ * cols_};
  }
  std::span<const double> slice(std::size_t e) const {
    return {values_.data() + e * rows_ * cols_, rows_ * cols_};
  }

  std::span<double> flat() noexcept { return values_; }
  std::span<const double> flat() const noexcept { return values_; }

  bool same_shape(const Tensor3& other) const noexcept {
    return entities_ == other.entities_ && rows_ == other.rows_ &&
           cols_ == other.cols_;
  }

  double sum() const noexcept;
  double squared_norm() const noexcept;
  double dot(const Tensor3& other) const;
  bool all_finite() const noexcept;

  // this += scale * other
  void axpy(double scale, const Tensor3& other);

 private:
  std::size_t entities_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace mmce

#endif  // MMCE_TENSOR_HPP_
