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

#include "mmce/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "mmce/error.hpp"

namespace mmce {
namespace {

std::optional<int> prediction_for(std::span<const int> predictions, std::size_t item) {
  if (item >= predictions.size() || predictions[item] < 0) return std::nullopt;
  return predictions[item];
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double error_rate(std::span<const int> predictions, const GoldLabels& gold) {
  std::size_t scored = 0, wrong = 0;
  for (const auto& [item, truth] : gold) {
    auto pred = prediction_for(predictions, item);
    if (!pred) continue;
    ++scored;
    if (*pred != truth) ++wrong;
  }
  if (scored == 0) throw Error(ErrorCode::EmptyInput, "no gold item has a prediction");
  return static_cast<double>(wrong) / static_cast<double>(scored);
}

double mean_square_error(std::span<const int> predictions, const GoldLabels& gold) {
  std::size_t scored = 0;
  double total = 0.0;
  for (const auto& [item, truth] : gold) {
    auto pred = prediction_for(predictions, item);
    if (!pred) continue;
    ++scored;
    const double d = static_cast<double>(*pred - truth);
    total += d * d;
  }
  if (scored == 0) throw Error(ErrorCode::EmptyInput, "no gold item has a prediction");
  return total / static_cast<double>(scored);
}

std::vector<int> rounded_mean_labels(const Posterior& posterior) {
  std::vector<int> out(posterior.num_items());
  const int top = static_cast<int>(posterior.num_classes()) - 1;
  for (std::size_t j = 0; j < posterior.num_items(); ++j) {
    double mean = 0.0;
    auto row = posterior.row(j);
    for (std::size_t c = 0; c < row.size(); ++c) mean += static_cast<double>(c) * row[c];
    int label = static_cast<int>(std::floor(mean + 0.5));
    out[j] = std::min(std::max(label, 0), top);
  }
  return out;
}

std::size_t calibration_bin_index(double max_probability) noexcept {
  for (std::size_t b = 0; b + 1 < kCalibrationUpperEdges.size(); ++b) {
    if (max_probability <= kCalibrationUpperEdges[b]) return b;
  }
  return kCalibrationUpperEdges.size() - 1;
}

std::vector<CalibrationBin> calibration_bins(const Posterior& posterior,
                                             std::span<const int> predictions,
                                             const GoldLabels& gold) {
  std::vector<CalibrationBin> bins(kCalibrationUpperEdges.size());
  std::vector<std::size_t> wrong(bins.size(), 0);
  std::vector<double> sq(bins.size(), 0.0);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins[b].lower = b == 0 ? 0.0 : kCalibrationUpperEdges[b - 1];
    bins[b].upper = kCalibrationUpperEdges[b];
  }
  for (const auto& [item, truth] : gold) {
    if (item >= posterior.num_items()) continue;
    auto pred = prediction_for(predictions, item);
    if (!pred) continue;
    const std::size_t b = calibration_bin_index(posterior.max_probability(item));
    ++bins[b].items;
    if (*pred != truth) ++wrong[b];
    const double d = static_cast<double>(*pred - truth);
    sq[b] += d * d;
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].items == 0) continue;
    const double n = static_cast<double>(bins[b].items);
    bins[b].error_rate = static_cast<double>(wrong[b]) / n;
    bins[b].mse = sq[b] / n;
  }
  return bins;
}

std::vector<CalibrationBin> calibration_bins(const Posterior& posterior,
                                             const GoldLabels& gold) {
  const auto labels = posterior.hard_labels();
  return calibration_bins(posterior, labels, gold);
}

EvalReport evaluate(const Posterior& posterior, std::span<const int> predictions,
                    const GoldLabels& gold, LabelMode mode, bool with_bins) {
  EvalReport report;
  for (const auto& [item, truth] : gold) {
    (void)truth;
    if (prediction_for(predictions, item)) ++report.n_scored;
  }
  report.error_rate = error_rate(predictions, gold);
  if (mode == LabelMode::Ordinal) report.mse = mean_square_error(predictions, gold);
  if (with_bins) report.calibration = calibration_bins(posterior, predictions, gold);
  return report;
}

void write_report_text(std::ostream& out, const EvalReport& report) {
  out << "items scored      " << report.n_scored << '\n';
  out << "error rate        " << fixed(100.0 * report.error_rate, 2) << "%\n";
  if (report.mse) out << "mean square error " << fixed(*report.mse, 3) << '\n';
  if (report.calibration.empty()) return;
  out << '\n';
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-12s %8s %10s %10s\n", "bin", "# items", "error", "mse");
  out << buf;
  for (const auto& b : report.calibration) {
    const std::string range = "(" + fixed(b.lower, 1) + ", " + fixed(b.upper, 1) + "]";
    if (b.items == 0) {
      std::snprintf(buf, sizeof buf, "%-12s %8zu %10s %10s\n", range.c_str(), b.items, "-", "-");
    } else {
      std::snprintf(buf, sizeof buf, "%-12s %8zu %10.3f %10.3f\n", range.c_str(), b.items,
                    b.error_rate, b.mse);
    }
    out << buf;
  }
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "row,lower,upper,items,error_rate,mse\n";
  out << "overall,0.0,1.0," << report.n_scored << ',' << fixed(report.error_rate, 6) << ','
      << (report.mse ? fixed(*report.mse, 6) : std::string()) << '\n';
  for (const auto& b : report.calibration) {
    out << "bin," << fixed(b.lower, 1) << ',' << fixed(b.upper, 1) << ',' << b.items << ','
        << fixed(b.error_rate, 6) << ',' << fixed(b.mse, 6) << '\n';
  }
}

}  // namespace mmce
