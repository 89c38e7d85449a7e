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

#include "mmce/confusion_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mmce/error.hpp"

namespace mmce {
namespace {

constexpr Relation kRelations[] = {Relation::GeGe, Relation::GeLt,
                                   Relation::LtGe, Relation::LtLt};

void require_classes(int num_classes) {
  if (num_classes < 2) {
    throw Error(ErrorCode::InvalidArgument, "number of classes must be at least 2");
  }
}

std::size_t rows_for(LabelMode mode, int K) {
  return mode == LabelMode::Multiclass ? static_cast<std::size_t>(K)
                                       : static_cast<std::size_t>(K - 1);
}

std::size_t cols_for(LabelMode mode, int K) {
  return mode == LabelMode::Multiclass ? static_cast<std::size_t>(K) : kNumRelations;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

Relation parse_relation(const std::string& text) {
  for (Relation r : kRelations) {
    if (text == to_string(r)) return r;
  }
  throw Error(ErrorCode::Parse, "unknown relation '" + text + "'");
}

}  // namespace

const char* to_string(LabelMode mode) noexcept {
  return mode == LabelMode::Multiclass ? "multiclass" : "ordinal";
}

const char* to_string(RegularizerVariant variant) noexcept {
  return variant == RegularizerVariant::Euclidean ? "euclidean" : "centered";
}

LabelMode parse_label_mode(std::string_view text) {
  if (text == "multiclass") return LabelMode::Multiclass;
  if (text == "ordinal") return LabelMode::Ordinal;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(text) + "'");
}

RegularizerVariant parse_regularizer_variant(std::string_view text) {
  if (text == "euclidean") return RegularizerVariant::Euclidean;
  if (text == "centered") return RegularizerVariant::Centered;
  throw Error(ErrorCode::InvalidArgument, "unknown variant '" + std::string(text) + "'");
}

const char* to_string(Relation relation) noexcept {
  switch (relation) {
    case Relation::GeGe: return "ge_ge";
    case Relation::GeLt: return "ge_lt";
    case Relation::LtGe: return "lt_ge";
    case Relation::LtLt: return "lt_lt";
  }
  return "?";
}

bool relation_holds(Relation relation, int threshold, int true_class,
                    int observed_class) noexcept {
  const bool c_ge = true_class >= threshold;
  const bool k_ge = observed_class >= threshold;
  switch (relation) {
    case Relation::GeGe: return c_ge && k_ge;
    case Relation::GeLt: return c_ge && !k_ge;
    case Relation::LtGe: return !c_ge && k_ge;
    case Relation::LtLt: return !c_ge && !k_ge;
  }
  return false;
}

ConfusionParams ConfusionParams::zeros(LabelMode mode, int num_classes,
                                       std::size_t num_workers,
                                       std::size_t num_items) {
  require_classes(num_classes);
  const auto rows = rows_for(mode, num_classes);
  const auto cols = cols_for(mode, num_classes);
  return ConfusionParams{mode, num_classes, Tensor3(num_workers, rows, cols),
                         Tensor3(num_items, rows, cols)};
}

Tensor3 ConfusionParams::dense_workers() const {
  return mode == LabelMode::Multiclass ? workers : expand_ordinal(workers, num_classes);
}

Tensor3 ConfusionParams::dense_items() const {
  return mode == LabelMode::Multiclass ? items : expand_ordinal(items, num_classes);
}

bool ConfusionParams::same_shape(const ConfusionParams& other) const noexcept {
  return mode == other.mode && num_classes == other.num_classes &&
         workers.same_shape(other.workers) && items.same_shape(other.items);
}

double ConfusionParams::squared_norm() const noexcept {
  return workers.squared_norm() + items.squared_norm();
}

double ConfusionParams::dot(const ConfusionParams& other) const {
  return workers.dot(other.workers) + items.dot(other.items);
}

void ConfusionParams::axpy(double scale, const ConfusionParams& other) {
  if (!same_shape(other)) {
    throw Error(ErrorCode::DimensionMismatch, "parameter shapes differ");
  }
  workers.axpy(scale, other.workers);
  items.axpy(scale, other.items);
}

Tensor3 expand_ordinal(const Tensor3& ordinal, int num_classes) {
  require_classes(num_classes);
  const auto K = static_cast<std::size_t>(num_classes);
  if (ordinal.rows() != K - 1 || ordinal.cols() != kNumRelations) {
    throw Error(ErrorCode::DimensionMismatch, "ordinal tensor must be (K-1) x 4 per entity");
  }
  Tensor3 dense(ordinal.entities(), K, K);
  for (std::size_t e = 0; e < ordinal.entities(); ++e) {
    for (int c = 0; c < num_classes; ++c) {
      for (int k = 0; k < num_classes; ++k) {
        double total = 0.0;
        for (int s = 1; s < num_classes; ++s) {
          // Exactly one of the four relations holds for each (c, k, s).
          for (Relation r : kRelations) {
            if (relation_holds(r, s, c, k)) {
              total += ordinal(e, static_cast<std::size_t>(s - 1), static_cast<std::size_t>(r));
            }
          }
        }
        dense(e, static_cast<std::size_t>(c), static_cast<std::size_t>(k)) = total;
      }
    }
  }
  return dense;
}

Tensor3 collapse_to_ordinal(const Tensor3& dense, int num_classes) {
  require_classes(num_classes);
  const auto K = static_cast<std::size_t>(num_classes);
  if (dense.rows() != K || dense.cols() != K) {
    throw Error(ErrorCode::DimensionMismatch, "dense tensor must be K x K per entity");
  }
  Tensor3 ordinal(dense.entities(), K - 1, kNumRelations);
  for (std::size_t e = 0; e < dense.entities(); ++e) {
    for (int s = 1; s < num_classes; ++s) {
      for (Relation r : kRelations) {
        double total = 0.0;
        for (int c = 0; c < num_classes; ++c) {
          for (int k = 0; k < num_classes; ++k) {
            if (relation_holds(r, s, c, k)) {
              total += dense(e, static_cast<std::size_t>(c), static_cast<std::size_t>(k));
            }
          }
        }
        ordinal(e, static_cast<std::size_t>(s - 1), static_cast<std::size_t>(r)) = total;
      }
    }
  }
  return ordinal;
}

void log_label_distribution(std::span<const double> sigma,
                            std::span<const double> tau, int num_classes,
                            int true_class, std::span<double> out) {
  const auto K = static_cast<std::size_t>(num_classes);
  const std::size_t base = static_cast<std::size_t>(true_class) * K;
  double peak = -INFINITY;
  for (std::size_t k = 0; k < K; ++k) {
    out[k] = sigma[base + k] + tau[base + k];
    peak = std::max(peak, out[k]);
  }
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k) z += std::exp(out[k] - peak);
  const double log_z = peak + std::log(z);
  for (std::size_t k = 0; k < K; ++k) out[k] -= log_z;
}

std::vector<double> label_distribution(std::span<const double> sigma,
                                       std::span<const double> tau,
                                       int num_classes, int true_class) {
  require_classes(num_classes);
  const auto K = static_cast<std::size_t>(num_classes);
  if (sigma.size() != K * K || tau.size() != K * K) {
    throw Error(ErrorCode::DimensionMismatch, "score matrices must be K x K");
  }
  if (true_class < 0 || true_class >= num_classes) {
    throw Error(ErrorCode::OutOfRange, "true class outside [0, K)");
  }
  std::vector<double> p(K);
  log_label_distribution(sigma, tau, num_classes, true_class, p);
  for (double& v : p) v = std::exp(v);
  return p;
}

RegularizerTerm regularizer(const Tensor3& params, LabelMode mode,
                            RegularizerVariant variant, double weight) {
  if (!(weight >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "regularization weight must be >= 0");
  }
  RegularizerTerm term{0.0, Tensor3(params.entities(), params.rows(), params.cols())};
  if (variant == RegularizerVariant::Euclidean) {
    auto src = params.flat();
    auto dst = term.gradient.flat();
    double total = 0.0;
    for (std::size_t n = 0; n < src.size(); ++n) {
      total += src[n] * src[n];
      dst[n] = weight * src[n];
    }
    term.value = 0.5 * weight * total;
    return term;
  }

  if (mode != LabelMode::Multiclass) {
    throw Error(ErrorCode::InvalidArgument, "centered regularizer is multiclass-only");
  }
  const std::size_t K = params.rows();
  if (params.cols() != K || K < 2) {
    throw Error(ErrorCode::DimensionMismatch, "centered regularizer needs K x K blocks");
  }
  // The centering map is an orthogonal projection, so the gradient of
  // 1/2 ||P sigma||^2 is P sigma itself.
  double total = 0.0;
  for (std::size_t e = 0; e < params.entities(); ++e) {
    double diag = 0.0, off = 0.0;
    for (std::size_t c = 0; c < K; ++c) {
      for (std::size_t k = 0; k < K; ++k) {
        (c == k ? diag : off) += params(e, c, k);
      }
    }
    diag /= static_cast<double>(K);
    off /= static_cast<double>(K * (K - 1));
    for (std::size_t c = 0; c < K; ++c) {
      for (std::size_t k = 0; k < K; ++k) {
        const double centered = params(e, c, k) - (c == k ? diag : off);
        total += centered * centered;
        term.gradient(e, c, k) = weight * centered;
      }
    }
  }
  term.value = 0.5 * weight * total;
  return term;
}

void write_params(std::ostream& out, const ConfusionParams& params,
                  const LabelMatrix& labels, const ParamsHeader& header) {
  if (params.workers.entities() != labels.num_workers() ||
      params.items.entities() != labels.num_items() ||
      params.num_classes != labels.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "parameters do not match label matrix");
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.9g", header.alpha);
  out << "# mode=" << to_string(params.mode) << " classes=" << params.num_classes
      << " variant=" << to_string(header.variant) << " alpha=" << buf;
  std::snprintf(buf, sizeof buf, "%.9g", header.beta);
  out << " beta=" << buf << '\n';
  const bool ordinal = params.mode == LabelMode::Ordinal;
  out << (ordinal ? "kind\tentity\ts\trelation\tvalue\n" : "kind\tentity\tc\tk\tvalue\n");

  auto emit = [&](const char* kind, const Tensor3& t, const IdMap& ids) {
    for (std::size_t e = 0; e < t.entities(); ++e) {
      for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t col = 0; col < t.cols(); ++col) {
          std::snprintf(buf, sizeof buf, "%.9f", t(e, r, col));
          out << kind << '\t' << ids.name(e) << '\t';
          if (ordinal) {
            out << r + 1 << '\t' << to_string(static_cast<Relation>(col));
          } else {
            out << r << '\t' << col;
          }
          out << '\t' << buf << '\n';
        }
      }
    }
  };
  emit("worker", params.workers, labels.worker_ids());
  emit("item", params.items, labels.item_ids());
}

ConfusionParams parse_params(std::istream& in, const LabelMatrix& labels,
                             ParamsHeader* header) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw Error(ErrorCode::Parse, "params: missing '# mode=...' header");
  }
  std::map<std::string, std::string> kv;
  {
    std::stringstream ss(line.substr(2));
    std::string token;
    while (ss >> token) {
      auto eq = token.find('=');
      if (eq != std::string::npos) kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
  }
  for (const char* key : {"mode", "classes", "variant", "alpha", "beta"}) {
    if (!kv.count(key)) throw Error(ErrorCode::Parse, std::string("params: header lacks ") + key);
  }
  const LabelMode mode = parse_label_mode(kv["mode"]);
  const int K = std::atoi(kv["classes"].c_str());
  if (K != labels.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "params: class count differs from labels");
  }
  if (header != nullptr) {
    header->alpha = std::strtod(kv["alpha"].c_str(), nullptr);
    header->beta = std::strtod(kv["beta"].c_str(), nullptr);
    header->variant = parse_regularizer_variant(kv["variant"]);
  }
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "params: missing column header");

  auto params = ConfusionParams::zeros(mode, K, labels.num_workers(), labels.num_items());
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 5) {
      throw Error(ErrorCode::Parse, "params:" + std::to_string(line_no) + ": expected 5 columns");
    }
    const bool is_worker = f[0] == "worker";
    if (!is_worker && f[0] != "item") {
      throw Error(ErrorCode::Parse, "params:" + std::to_string(line_no) + ": unknown kind");
    }
    auto entity = (is_worker ? labels.worker_ids() : labels.item_ids()).find(f[1]);
    if (!entity) {
      throw Error(ErrorCode::OutOfRange, "params:" + std::to_string(line_no) + ": unknown id '" + f[1] + "'");
    }
    Tensor3& t = is_worker ? params.workers : params.items;
    std::size_t row = 0, col = 0;
    if (mode == LabelMode::Ordinal) {
      row = static_cast<std::size_t>(std::atoi(f[2].c_str()) - 1);
      col = static_cast<std::size_t>(parse_relation(f[3]));
    } else {
      row = static_cast<std::size_t>(std::atoi(f[2].c_str()));
      col = static_cast<std::size_t>(std::atoi(f[3].c_str()));
    }
    if (row >= t.rows() || col >= t.cols()) {
      throw Error(ErrorCode::OutOfRange, "params:" + std::to_string(line_no) + ": index out of range");
    }
    t(*entity, row, col) = std::strtod(f[4].c_str(), nullptr);
  }
  return params;
}

}  // namespace mmce
