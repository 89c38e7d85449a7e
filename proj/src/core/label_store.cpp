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

#include "mmce/label_store.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include "mmce/error.hpp"

namespace mmce {
namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void parse_fail(std::string_view source, std::size_t line_no,
                             const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << line_no << ": " << what;
  throw Error(ErrorCode::Parse, msg.str());
}

std::string location(std::string_view source, std::size_t line_no) {
  std::ostringstream msg;
  msg << source << ":" << line_no << ": ";
  return msg.str();
}

int parse_label(std::string_view field, int num_classes, int label_base,
                std::string_view source, std::size_t line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    parse_fail(source, line_no, "label '" + std::string(field) + "' is not a decimal integer");
  }
  int label = value - label_base;
  if (label < 0 || label >= num_classes) {
    std::ostringstream msg;
    msg << location(source, line_no) << "label " << value << " outside ["
        << label_base << ", " << num_classes - 1 + label_base << "]";
    throw Error(ErrorCode::OutOfRange, msg.str());
  }
  return label;
}

void check_label_base(int label_base) {
  if (label_base != 0 && label_base != 1) {
    throw Error(ErrorCode::InvalidArgument, "label base must be 0 or 1");
  }
}

// getline without the trailing CR of CRLF files.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  }
  return in;
}

void build_index(std::size_t entities, const std::vector<Observation>& obs,
                 bool by_item, std::vector<std::size_t>& offsets,
                 std::vector<std::size_t>& index) {
  offsets.assign(entities + 1, 0);
  for (const auto& o : obs) ++offsets[(by_item ? o.item : o.worker) + 1];
  for (std::size_t e = 0; e < entities; ++e) offsets[e + 1] += offsets[e];
  index.resize(obs.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t n = 0; n < obs.size(); ++n) {
    std::size_t e = by_item ? obs[n].item : obs[n].worker;
    index[cursor[e]++] = n;
  }
}

}  // namespace

std::size_t IdMap::intern(std::string_view id) {
  auto it = index_.find(std::string(id));
  if (it != index_.end()) return it->second;
  std::size_t next = names_.size();
  names_.emplace_back(id);
  index_.emplace(names_.back(), next);
  return next;
}

std::optional<std::size_t> IdMap::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LabelMatrix::LabelMatrix(int num_classes, IdMap workers, IdMap items,
                         std::vector<Observation> observations)
    : num_classes_(num_classes), workers_(std::move(workers)),
      items_(std::move(items)), observations_(std::move(observations)) {
  if (num_classes_ < 2) {
    throw Error(ErrorCode::InvalidArgument, "number of classes must be at least 2");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& o : observations_) {
    if (o.worker >= workers_.size() || o.item >= items_.size()) {
      throw Error(ErrorCode::OutOfRange, "observation references unknown worker or item index");
    }
    if (o.label < 0 || o.label >= num_classes_) {
      throw Error(ErrorCode::OutOfRange, "observation label outside [0, K)");
    }
    if (!seen.emplace(o.worker, o.item).second) {
      throw Error(ErrorCode::Duplicate,
                  "duplicate observation for worker '" + workers_.name(o.worker) +
                      "' on item '" + items_.name(o.item) + "'");
    }
  }
  build_index(items_.size(), observations_, true, item_offsets_, item_index_);
  build_index(workers_.size(), observations_, false, worker_offsets_, worker_index_);
}

std::span<const std::size_t> LabelMatrix::item_observations(std::size_t item) const {
  return {item_index_.data() + item_offsets_[item],
          item_offsets_[item + 1] - item_offsets_[item]};
}

std::span<const std::size_t> LabelMatrix::worker_observations(std::size_t worker) const {
  return {worker_index_.data() + worker_offsets_[worker],
          worker_offsets_[worker + 1] - worker_offsets_[worker]};
}

LabelMatrix LabelMatrix::subset(std::span<const std::size_t> observation_indices) const {
  std::vector<Observation> kept;
  kept.reserve(observation_indices.size());
  for (std::size_t n : observation_indices) kept.push_back(observations_.at(n));
  return LabelMatrix(num_classes_, workers_, items_, std::move(kept));
}

void GoldLabels::set(std::size_t item, int label) {
  if (label < 0 || (num_classes_ > 0 && label >= num_classes_)) {
    throw Error(ErrorCode::OutOfRange, "gold label outside [0, K)");
  }
  labels_[item] = label;
}

std::optional<int> GoldLabels::get(std::size_t item) const {
  auto it = labels_.find(item);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

LabelMatrix parse_labels(std::istream& in, int num_classes, int label_base,
                         std::string_view source) {
  check_label_base(label_base);
  if (num_classes < 2) {
    throw Error(ErrorCode::InvalidArgument, "number of classes must be at least 2");
  }
  IdMap workers, items;
  std::vector<Observation> obs;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == "worker,item,label") continue;
    auto fields = split(line, ',');
    if (fields.size() != 3) {
      parse_fail(source, line_no, "expected 3 comma-separated fields, got " +
                                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      parse_fail(source, line_no, "empty worker or item id");
    }
    int label = parse_label(fields[2], num_classes, label_base, source, line_no);
    std::size_t w = workers.intern(fields[0]);
    std::size_t j = items.intern(fields[1]);
    if (!seen.emplace(w, j).second) {
      throw Error(ErrorCode::Duplicate,
                  location(source, line_no) + "duplicate observation for worker '" +
                      std::string(fields[0]) + "' on item '" + std::string(fields[1]) + "'");
    }
    obs.push_back({w, j, label});
  }
  return LabelMatrix(num_classes, std::move(workers), std::move(items), std::move(obs));
}

LabelMatrix load_labels(const std::filesystem::path& path, int num_classes,
                        int label_base) {
  auto in = open_input(path);
  return parse_labels(in, num_classes, label_base, path.string());
}

void write_labels(std::ostream& out, const LabelMatrix& labels, int label_base) {
  check_label_base(label_base);
  out << "worker,item,label\n";
  for (const auto& o : labels.observations()) {
    out << labels.worker_ids().name(o.worker) << ',' << labels.item_ids().name(o.item)
        << ',' << o.label + label_base << '\n';
  }
}

GoldLabels parse_gold(std::istream& in, const IdMap& items, int num_classes,
                      int label_base, UnknownItemPolicy policy,
                      std::string_view source) {
  check_label_base(label_base);
  GoldLabels gold(num_classes);
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == "item,label") continue;
    auto fields = split(line, ',');
    if (fields.size() != 2) {
      parse_fail(source, line_no, "expected 2 comma-separated fields, got " +
                                      std::to_string(fields.size()));
    }
    if (fields[0].empty()) parse_fail(source, line_no, "empty item id");
    int label = parse_label(fields[1], num_classes, label_base, source, line_no);
    auto item = items.find(fields[0]);
    if (!item) {
      if (policy == UnknownItemPolicy::Skip) continue;
      throw Error(ErrorCode::OutOfRange, location(source, line_no) + "gold item '" +
                                             std::string(fields[0]) + "' has no labels");
    }
    if (gold.get(*item)) {
      throw Error(ErrorCode::Duplicate, location(source, line_no) +
                                            "duplicate gold label for item '" +
                                            std::string(fields[0]) + "'");
    }
    gold.set(*item, label);
  }
  return gold;
}

GoldLabels load_gold(const std::filesystem::path& path, const IdMap& items,
                     int num_classes, int label_base, UnknownItemPolicy policy) {
  auto in = open_input(path);
  return parse_gold(in, items, num_classes, label_base, policy, path.string());
}

DatasetSummary summarize(const LabelMatrix& labels, const GoldLabels* gold) {
  DatasetSummary s;
  s.num_classes = labels.num_classes();
  s.num_items = labels.num_items();
  s.num_workers = labels.num_workers();
  s.num_labels = labels.num_labels();
  if (s.num_workers > 0) {
    s.labels_per_worker = static_cast<double>(s.num_labels) / static_cast<double>(s.num_workers);
  }
  if (s.num_items > 0) {
    s.labels_per_item = static_cast<double>(s.num_labels) / static_cast<double>(s.num_items);
  }
  if (gold != nullptr && !gold->empty()) {
    std::size_t scored = 0, wrong = 0;
    for (const auto& o : labels.observations()) {
      auto truth = gold->get(o.item);
      if (!truth) continue;
      ++scored;
      if (o.label != *truth) ++wrong;
    }
    if (scored > 0) {
      s.worker_error_rate = static_cast<double>(wrong) / static_cast<double>(scored);
    }
  }
  return s;
}

EmpiricalConfusion empirical_confusion(const LabelMatrix& labels,
                                       const Posterior& posterior) {
  const auto K = static_cast<std::size_t>(labels.num_classes());
  if (posterior.num_items() != labels.num_items() || posterior.num_classes() != K) {
    throw Error(ErrorCode::DimensionMismatch, "posterior shape does not match label matrix");
  }
  EmpiricalConfusion out{Tensor3(labels.num_workers(), K, K),
                         Tensor3(labels.num_items(), K, K)};
  for (const auto& o : labels.observations()) {
    const auto k = static_cast<std::size_t>(o.label);
    for (std::size_t c = 0; c < K; ++c) {
      double q = posterior(o.item, c);
      out.workers(o.worker, c, k) += q;
      out.items(o.item, c, k) += q;
    }
  }
  return out;
}

void write_posterior(std::ostream& out, const IdMap& items,
                     const Posterior& posterior, std::span<const int> predicted) {
  if (posterior.num_items() != items.size() || predicted.size() != items.size()) {
    throw Error(ErrorCode::DimensionMismatch, "posterior rows do not match item count");
  }
  out << "item\tpredicted";
  for (std::size_t c = 0; c < posterior.num_classes(); ++c) out << "\tp" << c;
  out << '\n';
  char buf[64];
  for (std::size_t j = 0; j < items.size(); ++j) {
    out << items.name(j) << '\t' << predicted[j];
    for (double p : posterior.row(j)) {
      std::snprintf(buf, sizeof buf, "%.6f", p);
      out << '\t' << buf;
    }
    out << '\n';
  }
}

PosteriorTable parse_posterior(std::istream& in, std::string_view source) {
  std::string line;
  if (!next_line(in, line)) parse_fail(source, 1, "missing header");
  auto header = split(line, '\t');
  if (header.size() < 4 || header[0] != "item" || header[1] != "predicted") {
    parse_fail(source, 1, "header must be item<TAB>predicted<TAB>p0..p{K-1} with K >= 2");
  }
  const std::size_t K = header.size() - 2;
  for (std::size_t c = 0; c < K; ++c) {
    if (header[c + 2] != "p" + std::to_string(c)) {
      parse_fail(source, 1, "expected column p" + std::to_string(c));
    }
  }
  PosteriorTable table;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != K + 2) parse_fail(source, line_no, "wrong number of columns");
    if (table.items.find(fields[0])) parse_fail(source, line_no, "duplicate item");
    table.items.intern(fields[0]);
    int pred = parse_label(fields[1], static_cast<int>(K), 0, source, line_no);
    table.predicted.push_back(pred);
    for (std::size_t c = 0; c < K; ++c) {
      std::string field(fields[c + 2]);
      char* end = nullptr;
      double p = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size() || !(p >= 0.0 && p <= 1.0)) {
        parse_fail(source, line_no, "probability '" + field + "' not in [0, 1]");
      }
      values.push_back(p);
    }
  }
  table.posterior = Posterior(table.items.size(), K);
  for (std::size_t j = 0; j < table.items.size(); ++j) {
    for (std::size_t c = 0; c < K; ++c) table.posterior(j, c) = values[j * K + c];
  }
  return table;
}

PosteriorTable load_posterior(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_posterior(in, path.string());
}

}  // namespace mmce
