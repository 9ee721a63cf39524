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

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace distal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SampleId = std::int64_t;

struct Sample {
  SampleId id = 0;
  Vector features;
  int true_label = 0;
};

struct SynthParams {
  int n = 1000;
  double sep = 5.0;
  std::uint64_t seed = 0;
};

// Where a dataset comes from and how it is split. `source` is either
// "synthetic" (blobs drawn from `synth`) or a path to a CSV file.
struct DatasetSpec {
  std::string name = "blobs";
  int dims = 2;
  int classes = 2;
  std::string source = "synthetic";
  SynthParams synth;
  std::array<double, 3> split{0.8, 0.1, 0.1};  // train, dev, test

  void validate() const;
  bool synthetic() const { return source == "synthetic"; }
};

// Immutable sample store with id lookup.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, int dims, int classes, std::vector<Sample> samples);

  const std::string& name() const { return name_; }
  int dims() const { return dims_; }
  int classes() const { return classes_; }
  std::size_t size() const { return samples_.size(); }
  const std::vector<Sample>& samples() const { return samples_; }

  bool contains(SampleId id) const { return index_.count(id) != 0; }
  const Sample& at(SampleId id) const;

  // Features of `ids` stacked as columns (dims x ids.size()).
  Matrix gather(std::span<const SampleId> ids) const;
  std::vector<int> true_labels(std::span<const SampleId> ids) const;

 private:
  std::string name_;
  int dims_ = 0;
  int classes_ = 0;
  std::vector<Sample> samples_;
  std::unordered_map<SampleId, std::size_t> index_;
};

struct PoolState {
  std::set<SampleId> labeled;
  std::set<SampleId> unlabeled;
  std::vector<SampleId> dev;
  std::vector<SampleId> test;
  std::map<SampleId, int> observed_label;

  std::size_t train_size() const { return labeled.size() + unlabeled.size(); }
  std::vector<SampleId> labeled_ids() const { return {labeled.begin(), labeled.end()}; }
  std::vector<SampleId> unlabeled_ids() const { return {unlabeled.begin(), unlabeled.end()}; }
  std::vector<int> observed_labels(std::span<const SampleId> ids) const;

  // Throws PreconditionError naming the first violated invariant.
  void check_invariants() const;
};

// Draws `n` samples from `classes` isotropic unit-variance Gaussians whose
// means are pairwise `sep` apart when classes <= dims (scaled axis vectors),
// otherwise adjacent means sit `sep` apart on a circle in the first two
// coordinates (or a line when dims == 1). Labels cycle so class counts are
// balanced within one.
std::vector<Sample> synth_blobs(int n, int classes, int dims, double sep,
                                std::uint64_t seed);

// Deterministic seeded train/dev/test partition; every train id starts
// unlabeled. Dev and test sizes are round(fraction * n).
PoolState split_pool(const Dataset& data, const std::array<double, 3>& split,
                     std::uint64_t seed);

struct LoadedData {
  Dataset dataset;
  PoolState pool;
};

// Reads `id,label,f1..fd` rows (header line required) and splits them.
LoadedData load_csv(const std::string& path, const DatasetSpec& spec,
                    std::uint64_t seed);

// Builds the dataset named by `spec` (synthetic or CSV) and splits it.
LoadedData make_data(const DatasetSpec& spec, std::uint64_t split_seed);

void write_csv(const std::string& path, const Dataset& data);

// Moves `ids` from unlabeled to labeled and reveals their true labels.
PoolState acquire(const PoolState& pool, std::span<const SampleId> ids,
                  const Dataset& data);

struct Corruption {
  PoolState pool;
  std::vector<SampleId> flipped;
};

// Flips floor(ratio * |ids|) uniformly chosen labels of `ids` to a different
// class. True labels are untouched.
Corruption corrupt_labels(const PoolState& pool, std::span<const SampleId> ids,
                          double ratio, int classes, std::uint64_t seed);

// JSON listing id membership per pool.
std::string split_manifest_json(const PoolState& pool);

}  // namespace distal
