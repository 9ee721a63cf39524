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

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "distal/classifier.hpp"
#include "distal/data_pool.hpp"

namespace distal {

/// Per-generation dev-set history. Row t holds the predicted labels of
/// generation t and the derived 0/1 correctness vector acc^t against the true
/// dev labels. Rows are appended once per trained generation, in order.
class AccMatrix {
 public:
  AccMatrix() = default;
  explicit AccMatrix(std::vector<int> dev_labels);

  // Builds a history directly from 0/1 correctness rows (labels all 0,
  // predictions 0 where correct and 1 where wrong).
  static AccMatrix from_correctness(const std::vector<std::vector<int>>& rows);

  void append(std::span<const int> predicted);

  int generations() const { return static_cast<int>(correct_.size()); }
  int last_generation() const { return generations() - 1; }
  Eigen::Index dev_size() const { return static_cast<Eigen::Index>(labels_.size()); }
  const std::vector<int>& labels() const { return labels_; }
  const Eigen::ArrayXi& correct(int t) const;
  const Eigen::ArrayXi& predicted(int t) const;
  double accuracy(int t) const { return correct(t).cast<double>().mean(); }

 private:
  std::vector<int> labels_;
  std::vector<Eigen::ArrayXi> correct_;
  std::vector<Eigen::ArrayXi> predicted_;
};

/// Appends the dev predictions of `params` (dev order as in `pool.dev`).
AccMatrix record_generation(const AccMatrix& mat, const Model& params, const Dataset& data, const PoolState& pool);

/// |{i : acc^{t1}_i = 1 and acc^{t2}_i = 0}|, requires 0 <= t1 < t2 <= last.
long forgetting_events(const AccMatrix& mat, int t1, int t2);
/// |{i : acc^{t1}_i = 0 and acc^{t2}_i = 1}|.
long learning_events(const AccMatrix& mat, int t1, int t2);

/// C_i = number of predecessors 0..t-1 that were correct on dev sample i
/// where generation t is wrong. Requires 1 <= t <= last.
Eigen::ArrayXi correct_inconsistency(const AccMatrix& mat, int t);

/// Sum over dev samples of correct_inconsistency, divided by t.
double mci(const AccMatrix& mat, int t);

/// Fraction of dev samples that generations a and b both classify correctly.
double correct_consistency(const AccMatrix& mat, int a, int b);

/// Mean of correct_consistency over all generation pairs a < b (0 when fewer
/// than two generations exist).
double mean_pairwise_correct_consistency(const AccMatrix& mat);

/// Rows = generations, columns = dev ids; header `generation,<id>,...`.
std::string accmatrix_csv(const AccMatrix& mat, std::span<const SampleId> dev_ids);

}  // namespace distal
