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
#include <optional>
#include <string>
#include <vector>

#include "distal/classifier.hpp"
#include "distal/data_pool.hpp"
#include "distal/engine.hpp"
#include "distal/kmeans.hpp"

namespace distal {

/// Classifier trained on the whole training pool, with its view of every
/// training sample.
struct ReferenceModel {
  Model params;
  std::vector<SampleId> train_ids;  // ascending
  Matrix embeddings;                // penultimate activations, one column per train id
  Matrix probs;                     // C x |train|
  double test_accuracy = 0.0;

  Eigen::Index column(SampleId id) const;
};

ReferenceModel train_reference(const Dataset& data, const PoolState& pool, Arch arch, int hidden,
                               const TrainConfig& train, std::uint64_t seed);

/// Shannon entropy in nats, with 0 ln 0 = 0.
double entropy(const Eigen::Ref<const Eigen::VectorXd>& p);

/// Per round, the mean reference-model entropy over the selected ids.
std::vector<double> uncertainty_quality(const ReferenceModel& ref,
                                        const std::vector<std::vector<SampleId>>& selections);

/// k-means over the reference embeddings of the training pool.
ClusterAssignment reference_clusters(const ReferenceModel& ref, std::size_t k, std::uint64_t seed);

/// Per round, the entropy of the cluster-membership histogram of the
/// selected ids.
std::vector<double> diversity_quality(const ReferenceModel& ref, const ClusterAssignment& clusters,
                                      const std::vector<std::vector<SampleId>>& selections);

struct QualityRow {
  int round = 0;
  std::size_t selected = 0;
  double uncertainty = 0.0;
  double diversity = 0.0;
};

/// Rebuilds the run's data from its config echo, trains the reference
/// model and scores every acquisition round. Clusters use k = run budget.
std::vector<QualityRow> analyze_run(const RunConfig& config, const RunReport& report);
std::string quality_csv(const std::vector<QualityRow>& rows);

/// Round-wise mean of test/val accuracy and MCI over runs of one config
/// (different seeds). Rounds are truncated to the shortest run. The phase
/// boundary is re-detected on the averaged validation curve unless `boundary`
/// is positive.
RunReport average_reports(const std::vector<RunReport>& reports, int boundary = 0);

/// Baseline plateau: mean test accuracy over the last (up to) 3 rounds.
double plateau_accuracy(const RunReport& report);

/// First round whose test accuracy reaches `threshold * plateau`.
std::optional<int> rounds_to_threshold(const RunReport& report, double plateau, double threshold);

struct ComparisonRow {
  std::string label;
  std::string mode;
  PhaseSummary stable;
  PhaseSummary saturated;
  // candidate minus baseline; absent when the phase is empty
  std::optional<double> stable_acc_delta;
  std::optional<double> stable_mci_delta;
  std::optional<double> saturated_acc_delta;
  std::optional<double> saturated_mci_delta;
  std::optional<int> rounds_to_threshold;
  std::optional<double> labeled_fraction_at_threshold;
};

struct Comparison {
  std::string dataset;
  std::size_t baseline = 0;
  int boundary = 0;  // baseline phase boundary, applied to every run
  double plateau = 0.0;
  double threshold = 1.0;
  std::vector<ComparisonRow> rows;
};

/// Phase means of every report under the baseline's boundary, deltas against
/// the baseline and rounds-to-threshold of the baseline plateau.
Comparison compare_runs(const std::vector<RunReport>& reports, const std::vector<std::string>& labels,
                        std::size_t baseline = 0, double threshold = 1.0);

/// Signed decimal with an explicit '+' for non-negative values.
std::string signed_delta(double v, int digits = 4);

std::string compare_csv(const Comparison& cmp);

}  // namespace distal
