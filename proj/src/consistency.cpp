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

#include "distal/consistency.hpp"

#include <sstream>

#include "distal/errors.hpp"

namespace distal {

namespace {

void check_generation(const AccMatrix& mat, int t) {
  if (t < 0 || t > mat.last_generation()) {
    throw IndexError("generation " + std::to_string(t) + " not recorded (last is " +
                     std::to_string(mat.last_generation()) + ")");
  }
}

void check_pair(const AccMatrix& mat, int t1, int t2) {
  check_generation(mat, t1);
  check_generation(mat, t2);
  if (t1 >= t2) throw IndexError("event counts need t1 < t2");
}

}  // namespace

AccMatrix::AccMatrix(std::vector<int> dev_labels) : labels_(std::move(dev_labels)) {
  if (labels_.empty()) throw PreconditionError("dev set must be non-empty");
}

AccMatrix AccMatrix::from_correctness(const std::vector<std::vector<int>>& rows) {
  if (rows.empty()) throw ArgumentError("history needs at least one row");
  AccMatrix mat(std::vector<int>(rows.front().size(), 0));
  for (const auto& row : rows) {
    std::vector<int> predicted(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) predicted[i] = row[i] ? 0 : 1;
    mat.append(predicted);
  }
  return mat;
}

void AccMatrix::append(std::span<const int> predicted) {
  if (predicted.size() != labels_.size()) {
    throw ShapeError("prediction row has " + std::to_string(predicted.size()) + " entries, dev size is " +
                     std::to_string(labels_.size()));
  }
  const auto m = static_cast<Eigen::Index>(predicted.size());
  Eigen::ArrayXi pred(m);
  Eigen::ArrayXi ok(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    pred(i) = predicted[static_cast<std::size_t>(i)];
    ok(i) = pred(i) == labels_[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  predicted_.push_back(std::move(pred));
  correct_.push_back(std::move(ok));
}

const Eigen::ArrayXi& AccMatrix::correct(int t) const {
  check_generation(*this, t);
  return correct_[static_cast<std::size_t>(t)];
}

const Eigen::ArrayXi& AccMatrix::predicted(int t) const {
  check_generation(*this, t);
  return predicted_[static_cast<std::size_t>(t)];
}

AccMatrix record_generation(const AccMatrix& mat, const Model& params, const Dataset& data, const PoolState& pool) {
  if (pool.dev.empty()) throw PreconditionError("dev set must be non-empty");
  AccMatrix next = mat;
  next.append(predict(params, data.gather(pool.dev)));
  return next;
}

long forgetting_events(const AccMatrix& mat, int t1, int t2) {
  check_pair(mat, t1, t2);
  return (mat.correct(t1) > mat.correct(t2)).count();
}

long learning_events(const AccMatrix& mat, int t1, int t2) {
  check_pair(mat, t1, t2);
  return (mat.correct(t1) < mat.correct(t2)).count();
}

Eigen::ArrayXi correct_inconsistency(const AccMatrix& mat, int t) {
  check_generation(mat, t);
  if (t < 1) throw IndexError("correct inconsistency needs t >= 1 (generation 0 has no predecessors)");
  // A predecessor can only be "more correct" where generation t is wrong,
  // so C_i is the predecessor hit count masked by the miss indicator.
  Eigen::ArrayXi hits = Eigen::ArrayXi::Zero(mat.dev_size());
  for (int s = 0; s < t; ++s) hits += mat.correct(s);
  return hits * (1 - mat.correct(t));
}

double mci(const AccMatrix& mat, int t) {
  return static_cast<double>(correct_inconsistency(mat, t).sum()) / static_cast<double>(t);
}

double correct_consistency(const AccMatrix& mat, int a, int b) {
  const auto& pa = mat.predicted(a);
  const auto& pb = mat.predicted(b);
  long both = 0;
  for (Eigen::Index i = 0; i < mat.dev_size(); ++i) {
    const int y = mat.labels()[static_cast<std::size_t>(i)];
    both += (pa(i) == y && pb(i) == y) ? 1 : 0;
  }
  return static_cast<double>(both) / static_cast<double>(mat.dev_size());
}

double mean_pairwise_correct_consistency(const AccMatrix& mat) {
  const int g = mat.generations();
  if (g < 2) return 0.0;
  double total = 0.0;
  long pairs = 0;
  for (int a = 0; a < g; ++a) {
    for (int b = a + 1; b < g; ++b) {
      total += correct_consistency(mat, a, b);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

std::string accmatrix_csv(const AccMatrix& mat, std::span<const SampleId> dev_ids) {
  if (static_cast<Eigen::Index>(dev_ids.size()) != mat.dev_size()) throw ShapeError("dev id count != dev size");
  std::ostringstream out;
  out << "generation";
  for (SampleId id : dev_ids) out << ',' << id;
  out << '\n';
  for (int t = 0; t < mat.generations(); ++t) {
    out << t;
    const auto& row = mat.correct(t);
    for (Eigen::Index i = 0; i < row.size(); ++i) out << ',' << row(i);
    out << '\n';
  }
  return out.str();
}

}  // namespace distal
