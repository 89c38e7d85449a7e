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

// Worker and item confusion scores and the labeling model built from them:
//
//   P(X_ij = k | Y_j = c) = exp[sigma_i(c,k) + tau_j(c,k)] / Z_ij(c)
//
// Multiclass mode stores sigma/tau densely as K x K matrices. Ordinal mode
// stores, for each threshold s in 1..K-1, four scores keyed by whether the
// true label c and the observed label k fall at/above or below s; the dense
// matrix is the indicator-weighted sum of those scores.

#ifndef MMCE_CONFUSION_MODEL_HPP_
#define MMCE_CONFUSION_MODEL_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmce/label_store.hpp"
#include "mmce/tensor.hpp"

namespace mmce {

enum class LabelMode { Multiclass, Ordinal };
enum class RegularizerVariant { Euclidean, Centered };

const char* to_string(LabelMode mode) noexcept;
const char* to_string(RegularizerVariant variant) noexcept;
LabelMode parse_label_mode(std::string_view text);
RegularizerVariant parse_regularizer_variant(std::string_view text);

/// Relation of (true label, observed label) to a threshold s. The enumerator
/// value is the column index inside an ordinal parameter tensor.
enum class Relation : int { GeGe = 0, GeLt = 1, LtGe = 2, LtLt = 3 };
inline constexpr std::size_t kNumRelations = 4;

const char* to_string(Relation relation) noexcept;
bool relation_holds(Relation relation, int threshold, int true_class,
                    int observed_class) noexcept;

/// Worker scores (m entities) and item scores (n entities) in the mode's
/// parameterization: K x K per entity for multiclass, (K-1) x 4 for ordinal.
/// Gradients with respect to the parameters reuse this type.
struct ConfusionParams {
  LabelMode mode = LabelMode::Multiclass;
  int num_classes = 0;
  Tensor3 workers;
  Tensor3 items;

  static ConfusionParams zeros(LabelMode mode, int num_classes,
                               std::size_t num_workers, std::size_t num_items);

  Tensor3 dense_workers() const;
  Tensor3 dense_items() const;

  bool same_shape(const ConfusionParams& other) const noexcept;
  double squared_norm() const noexcept;
  double dot(const ConfusionParams& other) const;
  void axpy(double scale, const ConfusionParams& other);
};

// Dense K x K scores from (K-1) x 4 threshold scores, per entity.
Tensor3 expand_ordinal(const Tensor3& ordinal, int num_classes);

// Adjoint of expand_ordinal: collapses a dense per-(c,k) quantity onto the
// threshold scores, entry (s, rel) = sum_{c,k} I(rel holds at s) dense(c,k).
Tensor3 collapse_to_ordinal(const Tensor3& dense, int num_classes);

// Distribution over observed labels given true class c for one
// (worker, item) pair; sigma and tau are row-major K x K score matrices.
std::vector<double> label_distribution(std::span<const double> sigma,
                                       std::span<const double> tau,
                                       int num_classes, int true_class);

// Writes log P(k | c) for all k into out (length K). Max-shifted.
void log_label_distribution(std::span<const double> sigma,
                            std::span<const double> tau, int num_classes,
                            int true_class, std::span<double> out);

struct RegularizerTerm {
  double value = 0.0;
  Tensor3 gradient;  // gradient of value, same shape as the parameters
};

// weight/2 * ||params||^2 (Euclidean), or the per-worker centered form that
// penalizes deviations of diagonal entries from the diagonal mean and of
// off-diagonal entries from the off-diagonal mean. Centered is multiclass
// only.
RegularizerTerm regularizer(const Tensor3& params, LabelMode mode,
                            RegularizerVariant variant, double weight);

/// Header values recorded at the top of a parameter sidecar.
struct ParamsHeader {
  double alpha = 0.0;
  double beta = 0.0;
  RegularizerVariant variant = RegularizerVariant::Euclidean;
};

// One line per (entity, c, k) or (entity, s, relation); 9-decimal scores.
void write_params(std::ostream& out, const ConfusionParams& params,
                  const LabelMatrix& labels, const ParamsHeader& header);
ConfusionParams parse_params(std::istream& in, const LabelMatrix& labels,
                             ParamsHeader* header = nullptr);

}  // namespace mmce

#endif  // MMCE_CONFUSION_MODEL_HPP_
