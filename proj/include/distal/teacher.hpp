// Copyright 2026 The Distal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "distal/classifier.hpp"
#include "distal/data_pool.hpp"

namespace distal {

struct ModelSnapshot {
  int generation = 0;
  Model params;
  Eigen::ArrayXi dev_acc;    // acc^t on the dev set
  Eigen::ArrayXi dev_preds;  // predicted dev labels
  double val_accuracy = 0.0;
};

/// Predecessor generations in strictly increasing generation order.
class SnapshotStore {
 public:
  void push(ModelSnapshot snapshot);

  bool empty() const { return snapshots_.empty(); }
  std::size_t size() const { return snapshots_.size(); }
  const ModelSnapshot& back() const;
  const ModelSnapshot& at_generation(int generation) const;
  const std::vector<ModelSnapshot>& snapshots() const { return snapshots_; }

  // One JSON object per line: generation, val_accuracy, dev_acc, dev_preds, params.
  void save(const std::string& path) const;
  static SnapshotStore load(const std::string& path);

 private:
  std::vector<ModelSnapshot> snapshots_;
};

/// Most recent snapshot, i.e. the acquisition model itself.
const ModelSnapshot& select_mc(const SnapshotStore& store);

/// Softmax of a correct-inconsistency vector; entries sum to 1.
struct ImportanceWeights {
  Eigen::VectorXd values;
};

ImportanceWeights importance_weights(const Eigen::Ref<const Eigen::VectorXd>& ci);

inline ImportanceWeights importance_weights(const Eigen::ArrayXi& ci) {
  const Eigen::VectorXd v = ci.cast<double>().matrix();
  return importance_weights(Eigen::Ref<const Eigen::VectorXd>(v));
}

/// Weighted dev accuracy (sum_i w_i acc_i) / m of a candidate teacher.
double teacher_score(const ImportanceWeights& weights, const Eigen::ArrayXi& candidate_acc);

struct NcSelection {
  const ModelSnapshot* teacher = nullptr;
  double score = 0.0;
  bool fallback = false;  // no eligible candidate; the most recent snapshot was used
  std::vector<std::pair<int, double>> scores;  // (generation, g) per eligible candidate
};

/// Scores every snapshot older than the most recent one with the importance
/// weights of `current_ci` and returns the best (latest among ties). Falls
/// back to select_mc when no older snapshot exists.
NcSelection select_nc(const SnapshotStore& store, const Eigen::Ref<const Eigen::VectorXd>& current_ci);

/// Memoised teacher probability vectors keyed by (generation, sample id).
class PseudoLabelCache {
 public:
  const Eigen::VectorXd* find(int generation, SampleId id) const;
  void insert(int generation, SampleId id, Eigen::VectorXd probs);

  std::size_t size() const { return entries_.size(); }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  double hit_ratio() const;
  void count(bool hit) { hit ? ++hits_ : ++misses_; }

 private:
  std::map<std::pair<int, SampleId>, Eigen::VectorXd> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct PseudoLabels {
  Eigen::MatrixXd probs;  // C x ids.size()
  std::size_t hits = 0;
  std::size_t misses = 0;  // forward passes actually run
};

/// Teacher probabilities of one snapshot for `ids`, running forward only on
/// cache misses.
PseudoLabels pseudo_labels(PseudoLabelCache& cache, const ModelSnapshot& snapshot, std::span<const SampleId> ids,
                           const Dataset& data);

/// A teacher that averages the predictive distributions of its members. A
/// single-member provider is an ordinary single-model teacher. Holds
/// pointers into a SnapshotStore, valid until the store is next modified.
class TeacherProvider {
 public:
  static TeacherProvider single(const ModelSnapshot& snapshot);

  const std::vector<const ModelSnapshot*>& members() const { return members_; }
  bool is_ensemble() const { return members_.size() > 1; }

  // Fresh forward passes, no cache.
  Eigen::VectorXd probs(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  PseudoLabels pseudo_labels(PseudoLabelCache& cache, std::span<const SampleId> ids, const Dataset& data) const;

 private:
  friend TeacherProvider select_ensemble(const SnapshotStore& store);
  std::vector<const ModelSnapshot*> members_;
};

/// Averages every snapshot in the store.
TeacherProvider select_ensemble(const SnapshotStore& store);

}  // namespace distal
