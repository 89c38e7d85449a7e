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

#ifndef MMCE_EVALUATION_HPP_
#define MMCE_EVALUATION_HPP_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mmce/confusion_model.hpp"
#include "mmce/label_store.hpp"
#include "mmce/posterior.hpp"

namespace mmce {

// Upper edges of the calibration bins (0,0.5], (0.5,0.6], ..., (0.9,1].
inline constexpr std::array<double, 6> kCalibrationUpperEdges = {0.5, 0.6, 0.7,
                                                                 0.8, 0.9, 1.0};

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t items = 0;
  double error_rate = 0.0;  // 0 for empty bins
  double mse = 0.0;
};

struct EvalReport {
  double error_rate = 0.0;
  std::optional<double> mse;  // ordinal mode only
  std::size_t n_scored = 0;
  std::vector<CalibrationBin> calibration;  // empty unless requested
};

// Point prediction used for ordinal scoring.
enum class OrdinalPoint { Argmax, RoundedMean };

// predictions[j] is the predicted class of item j; negative entries and
// items past the end count as "no prediction". Both throw EmptyInput when no
// gold item has a prediction.
double error_rate(std::span<const int> predictions, const GoldLabels& gold);
double mean_square_error(std::span<const int> predictions, const GoldLabels& gold);

// Posterior-mean label rounded to the nearest class (halves round up).
std::vector<int> rounded_mean_labels(const Posterior& posterior);

std::size_t calibration_bin_index(double max_probability) noexcept;

std::vector<CalibrationBin> calibration_bins(const Posterior& posterior,
                                             std::span<const int> predictions,
                                             const GoldLabels& gold);
std::vector<CalibrationBin> calibration_bins(const Posterior& posterior,
                                             const GoldLabels& gold);

EvalReport evaluate(const Posterior& posterior, std::span<const int> predictions,
                    const GoldLabels& gold, LabelMode mode, bool with_bins);

// Aligned plain-text table.
void write_report_text(std::ostream& out, const EvalReport& report);
// CSV `row,lower,upper,items,error_rate,mse`; one `overall` row then one
// `bin` row per calibration bin.
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace mmce

#endif  // MMCE_EVALUATION_HPP_
