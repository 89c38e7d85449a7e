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

// Crowd label ingestion: the sparse (worker, item, label) observation set,
// gold labels, dataset summaries, empirical confusion counts and the
// posterior TSV format.

#ifndef MMCE_LABEL_STORE_HPP_
#define MMCE_LABEL_STORE_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmce/posterior.hpp"
#include "mmce/tensor.hpp"

namespace mmce {

/// Bidirectional map between external string IDs and dense indices assigned
/// in first-appearance order.
class IdMap {
 public:
  std::size_t intern(std::string_view id);
  std::optional<std::size_t> find(std::string_view id) const;
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Observation {
  std::size_t worker = 0;
  std::size_t item = 0;
  int label = 0;

  bool operator==(const Observation&) const = default;
};

/// Immutable observation set. Labels are 0-based class indices in
/// [0, num_classes); at most one observation per (worker, item).
class LabelMatrix {
 public:
  LabelMatrix(int num_classes, IdMap workers, IdMap items,
              std::vector<Observation> observations);

  int num_classes() const noexcept { return num_classes_; }
  std::size_t num_workers() const noexcept { return workers_.size(); }
  std::size_t num_items() const noexcept { return items_.size(); }
  std::size_t num_labels() const noexcept { return observations_.size(); }

  const std::vector<Observation>& observations() const noexcept {
    return observations_;
  }
  const IdMap& worker_ids() const noexcept { return workers_; }
  const IdMap& item_ids() const noexcept { return items_; }

  // Indices into observations(), in file order.
  std::span<const std::size_t> item_observations(std::size_t item) const;
  std::span<const std::size_t> worker_observations(std::size_t worker) const;

  // Same ID maps and class count, restricted to the given observations.
  LabelMatrix subset(std::span<const std::size_t> observation_indices) const;

 private:
  int num_classes_;
  IdMap workers_;
  IdMap items_;
  std::vector<Observation> observations_;
  std::vector<std::size_t> item_offsets_, item_index_;
  std::vector<std::size_t> worker_offsets_, worker_index_;
};

/// Partial map item -> true class used for evaluation.
class GoldLabels {
 public:
  GoldLabels() = default;
  explicit GoldLabels(int num_classes) : num_classes_(num_classes) {}

  void set(std::size_t item, int label);
  std::optional<int> get(std::size_t item) const;
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  int num_classes() const noexcept { return num_classes_; }

  auto begin() const { return labels_.begin(); }
  auto end() const { return labels_.end(); }

 private:
  int num_classes_ = 0;
  std::map<std::size_t, int> labels_;
};

enum class UnknownItemPolicy { Reject, Skip };

struct DatasetSummary {
  int num_classes = 0;
  std::size_t num_items = 0;
  std::size_t num_workers = 0;
  std::size_t num_labels = 0;
  double labels_per_worker = 0.0;
  double labels_per_item = 0.0;
  std::optional<double> worker_error_rate;
};

// Posterior-weighted confusion counts: workers is m x K x K with entry
// (i, c, k) = sum_j Q(Y_j = c) I(x_ij = k); items is the n x K x K analogue
// summed over workers.
struct EmpiricalConfusion {
  Tensor3 workers;
  Tensor3 items;
};

LabelMatrix parse_labels(std::istream& in, int num_classes, int label_base = 0,
                         std::string_view source = "<stream>");
LabelMatrix load_labels(const std::filesystem::path& path, int num_classes,
                        int label_base = 0);
void write_labels(std::ostream& out, const LabelMatrix& labels,
                  int label_base = 0);

GoldLabels parse_gold(std::istream& in, const IdMap& items, int num_classes,
                      int label_base = 0,
                      UnknownItemPolicy policy = UnknownItemPolicy::Reject,
                      std::string_view source = "<stream>");
GoldLabels load_gold(const std::filesystem::path& path, const IdMap& items,
                     int num_classes, int label_base = 0,
                     UnknownItemPolicy policy = UnknownItemPolicy::Reject);

DatasetSummary summarize(const LabelMatrix& labels,
                         const GoldLabels* gold = nullptr);

EmpiricalConfusion empirical_confusion(const LabelMatrix& labels,
                                       const Posterior& posterior);

/// Posterior TSV as read back from disk.
struct PosteriorTable {
  IdMap items;
  std::vector<int> predicted;
  Posterior posterior;
};

// Header `item\tpredicted\tp0..p{K-1}`; probabilities with 6 decimals.
void write_posterior(std::ostream& out, const IdMap& items,
                     const Posterior& posterior,
                     std::span<const int> predicted);
PosteriorTable parse_posterior(std::istream& in,
                               std::string_view source = "<stream>");
PosteriorTable load_posterior(const std::filesystem::path& path);

}  // namespace mmce

#endif  // MMCE_LABEL_STORE_HPP_
