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

#include "mmce/tensor.hpp"

#include <cmath>

#include "mmce/error.hpp"

namespace mmce {

double Tensor3::sum() const noexcept {
  double total = 0.0;
  for (double v : values_) total += v;
  return total;
}

double Tensor3::squared_norm() const noexcept {
  double total = 0.0;
  for (double v : values_) total += v * v;
  return total;
}

double Tensor3::dot(const Tensor3& other) const {
  if (!same_shape(other)) {
    throw Error(ErrorCode::DimensionMismatch, "tensor shapes differ in dot");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    total += values_[i] * other.values_[i];
  }
  return total;
}

bool Tensor3::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor3::axpy(double scale, const Tensor3& other) {
  if (!same_shape(other)) {
    throw Error(ErrorCode::DimensionMismatch, "tensor shapes differ in axpy");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] += scale * other.values_[i];
  }
}

}  // namespace mmce
