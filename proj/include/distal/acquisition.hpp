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

#include <cstdint>
#include <string>
#include <vector>

#include "distal/classifier.hpp"
#include "distal/data_pool.hpp"

namespace distal {

enum class Strategy { random, conf, coreset, badge };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

/// Inputs to one acquisition step: the acquisition model M_t scores the
/// unlabeled pool and `k` ids are chosen.
struct AcquisitionRequest {
  const Model& model;
  const Dataset& data;
  const PoolState& pool;
  std::size_t k = 1;
  std::uint64_t seed = 0;
};

std::vector<SampleId> random_select(const AcquisitionRequest& req);

/// Least confidence: the k ids with the smallest max-probability, ties by id.
std::vector<SampleId> conf_select(const AcquisitionRequest& req);

/// Greedy k-center over penultimate embeddings, conditioned on the labeled
/// pool. Ties go to the smaller id.
std::vector<SampleId> coreset_select(const AcquisitionRequest& req);

/// k-means++ seeding over last-layer gradient embeddings computed with the
/// model's own argmax as pseudo label.
std::vector<SampleId> badge_select(const AcquisitionRequest& req);

std::vector<SampleId> select(Strategy strategy, const AcquisitionRequest& req);

/// Column j is (probs - onehot(argmax probs)) outer penult for input column j,
/// flattened class-major to length C * penult_dims.
Matrix gradient_embeddings(const Model& model, const Matrix& X);

/// Greedy furthest-first traversal. Returns column indices into `candidates`.
/// `centers` holds the already-covered points and must be non-empty.
std::vector<Eigen::Index> furthest_first(const Matrix& centers, const Matrix& candidates, std::size_t k);

}  // namespace distal
