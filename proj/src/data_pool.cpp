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

#include "distal/data_pool.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "distal/errors.hpp"
#include "distal/io.hpp"
#include "distal/rng.hpp"

namespace distal {

namespace {

double standard_normal(Rng& rng) {
  // Box-Muller on our own uniform draws keeps the sequence platform-stable.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void DatasetSpec::validate() const {
  if (classes < 2) throw ArgumentError("dataset.classes must be >= 2");
  if (dims < 1) throw ArgumentError("dataset.dims must be >= 1");
  double sum = 0.0;
  for (double f : split) {
    if (f < 0.0) throw ArgumentError("split fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("split fractions must sum to 1");
}

Dataset::Dataset(std::string name, int dims, int classes, std::vector<Sample> samples)
    : name_(std::move(name)), dims_(dims), classes_(classes), samples_(std::move(samples)) {
  index_.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.id < 0) throw ArgumentError("sample ids must be non-negative");
    if (s.features.size() != dims_) {
      throw DimensionError("sample " + std::to_string(s.id) + " has " +
                           std::to_string(s.features.size()) + " features, expected " +
                           std::to_string(dims_));
    }
    if (s.true_label < 0 || s.true_label >= classes_) {
      throw LabelError("sample " + std::to_string(s.id) + " has label " +
                       std::to_string(s.true_label) + " outside [0, " +
                       std::to_string(classes_) + ")");
    }
    if (!index_.emplace(s.id, i).second) {
      throw ArgumentError("duplicate sample id " + std::to_string(s.id));
    }
  }
}

const Sample& Dataset::at(SampleId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("unknown sample id " + std::to_string(id));
  return samples_[it->second];
}

Matrix Dataset::gather(std::span<const SampleId> ids) const {
  Matrix X(dims_, static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) X.col(static_cast<Eigen::Index>(j)) = at(ids[j]).features;
  return X;
}

std::vector<int> Dataset::true_labels(std::span<const SampleId> ids) const {
  std::vector<int> out;
  out.reserve(ids.size());
  for (SampleId id : ids) out.push_back(at(id).true_label);
  return out;
}

std::vector<int> PoolState::observed_labels(std::span<const SampleId> ids) const {
  std::vector<int> out;
  out.reserve(ids.size());
  for (SampleId id : ids) {
    auto it = observed_label.find(id);
    if (it == observed_label.end()) throw LookupError("no observed label for id " + std::to_string(id));
    out.push_back(it->second);
  }
  return out;
}

void PoolState::check_invariants() const {
  for (SampleId id : labeled) {
    if (unlabeled.count(id)) throw PreconditionError("id " + std::to_string(id) + " both labeled and unlabeled");
    if (!observed_label.count(id)) throw PreconditionError("labeled id " + std::to_string(id) + " lacks a label");
  }
  std::set<SampleId> held(dev.begin(), dev.end());
  held.insert(test.begin(), test.end());
  if (held.size() != dev.size() + test.size()) throw PreconditionError("dev and test overlap");
  for (SampleId id : held) {
    if (labeled.count(id) || unlabeled.count(id)) {
      throw PreconditionError("held-out id " + std::to_string(id) + " is in the train pool");
    }
  }
  if (dev.empty()) throw PreconditionError("dev set is empty");
}

std::vector<Sample> synth_blobs(int n, int classes, int dims, double sep, std::uint64_t seed) {
  if (classes < 2) throw ArgumentError("synth_blobs: classes must be >= 2");
  if (n < classes) throw ArgumentError("synth_blobs: n must be >= classes");
  if (dims < 1) throw ArgumentError("synth_blobs: dims must be >= 1");
  if (!(sep > 0.0)) throw ArgumentError("synth_blobs: sep must be > 0");

  std::vector<Vector> means(static_cast<std::size_t>(classes), Vector::Zero(dims));
  if (classes <= dims) {
    for (int c = 0; c < classes; ++c) means[c](c) = sep / std::numbers::sqrt2;
  } else if (dims == 1) {
    for (int c = 0; c < classes; ++c) means[c](0) = sep * c;
  } else {
    // Chord length between neighbours on a circle of radius r is 2 r sin(pi / C).
    const double r = sep / (2.0 * std::sin(std::numbers::pi / classes));
    for (int c = 0; c < classes; ++c) {
      const double a = 2.0 * std::numbers::pi * c / classes;
      means[c](0) = r * std::cos(a);
      means[c](1) = r * std::sin(a);
    }
  }

  Rng rng = make_stream(seed, "synth");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.id = i;
    s.true_label = i % classes;
    s.features = means[s.true_label];
    for (int j = 0; j < dims; ++j) s.features(j) += standard_normal(rng);
    out.push_back(std::move(s));
  }
  return out;
}

PoolState split_pool(const Dataset& data, const std::array<double, 3>& split, std::uint64_t seed) {
  std::vector<SampleId> ids;
  ids.reserve(data.size());
  for (const Sample& s : data.samples()) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  Rng rng = make_stream(seed, "split");
  seeded_shuffle(ids, rng);

  const auto n = static_cast<double>(ids.size());
  const auto n_dev = static_cast<std::size_t>(std::llround(split[1] * n));
  const auto n_test = static_cast<std::size_t>(std::llround(split[2] * n));
  if (n_dev == 0) throw ArgumentError("split leaves the dev set empty");
  if (n_dev + n_test >= ids.size()) throw ArgumentError("split leaves the train pool empty");
  const std::size_t n_train = ids.size() - n_dev - n_test;

  PoolState pool;
  pool.unlabeled.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  pool.dev.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                  ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  pool.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), ids.end());
  std::sort(pool.dev.begin(), pool.dev.end());
  std::sort(pool.test.begin(), pool.test.end());
  return pool;
}

LoadedData load_csv(const std::string& path, const DatasetSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path);

  std::vector<Sample> samples;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      const auto cols = split_fields(view);
      if (cols.size() < 3 || trim(cols[0]) != "id" || trim(cols[1]) != "label") {
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected header id,label,f1..fd");
      }
      continue;
    }
    const auto fields = split_fields(view);
    const auto where = path + ":" + std::to_string(lineno);
    if (fields.size() < 2) throw ParseError(where + ": malformed row");
    if (fields.size() - 2 != static_cast<std::size_t>(spec.dims)) {
      throw DimensionError(where + ": row has " + std::to_string(fields.size() - 2) +
                           " features, expected " + std::to_string(spec.dims));
    }
    Sample s;
    if (!parse_number(fields[0], s.id) || s.id < 0) throw ParseError(where + ": bad id");
    if (!parse_number(fields[1], s.true_label)) throw ParseError(where + ": bad label");
    if (s.true_label < 0 || s.true_label >= spec.classes) {
      throw LabelError(where + ": label " + std::to_string(s.true_label) + " outside [0, " +
                       std::to_string(spec.classes) + ")");
    }
    s.features.resize(spec.dims);
    for (int j = 0; j < spec.dims; ++j) {
      if (!parse_number(fields[static_cast<std::size_t>(j) + 2], s.features(j)) ||
          !std::isfinite(s.features(j))) {
        throw ParseError(where + ": bad feature f" + std::to_string(j + 1));
      }
    }
    samples.push_back(std::move(s));
  }
  if (!header_seen) throw ParseError(path + ": empty file");

  Dataset data(spec.name, spec.dims, spec.classes, std::move(samples));
  PoolState pool = split_pool(data, spec.split, seed);
  return {std::move(data), std::move(pool)};
}

LoadedData make_data(const DatasetSpec& spec, std::uint64_t split_seed) {
  spec.validate();
  if (!spec.synthetic()) return load_csv(spec.source, spec, split_seed);
  Dataset data(spec.name, spec.dims, spec.classes,
               synth_blobs(spec.synth.n, spec.classes, spec.dims, spec.synth.sep, spec.synth.seed));
  PoolState pool = split_pool(data, spec.split, split_seed);
  return {std::move(data), std::move(pool)};
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ostringstream out;
  out << "id,label";
  for (int j = 1; j <= data.dims(); ++j) out << ",f" << j;
  out << '\n';
  for (const Sample& s : data.samples()) {
    out << s.id << ',' << s.true_label;
    for (int j = 0; j < data.dims(); ++j) out << ',' << format_double(s.features(j));
    out << '\n';
  }
  atomic_write(path, out.str());
}

PoolState acquire(const PoolState& pool, std::span<const SampleId> ids, const Dataset& data) {
  PoolState next = pool;
  for (SampleId id : ids) {
    if (next.unlabeled.erase(id) == 0) {
      throw AcquisitionError("cannot acquire id " + std::to_string(id) + ": not in the unlabeled pool");
    }
    next.labeled.insert(id);
    next.observed_label[id] = data.at(id).true_label;
  }
  return next;
}

Corruption corrupt_labels(const PoolState& pool, std::span<const SampleId> ids, double ratio,
                          int classes, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ArgumentError("corruption ratio must lie in [0, 1]");
  if (classes < 2) throw ArgumentError("corruption needs at least two classes");
  for (SampleId id : ids) {
    if (!pool.labeled.count(id)) {
      throw PreconditionError("cannot corrupt id " + std::to_string(id) + ": not labeled");
    }
  }
  Corruption out{pool, {}};
  const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(ids.size()) + 1e-9));
  if (count == 0) return out;

  std::vector<SampleId> order(ids.begin(), ids.end());
  Rng rng = make_stream(seed, "corrupt");
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(order[i], order[i + uniform_index(rng, order.size() - i)]);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const SampleId id = order[i];
    int& label = out.pool.observed_label.at(id);
    // Uniform over the C - 1 other classes.
    int replacement = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(classes - 1)));
    if (replacement >= label) ++replacement;
    label = replacement;
    out.flipped.push_back(id);
  }
  std::sort(out.flipped.begin(), out.flipped.end());
  return out;
}

std::string split_manifest_json(const PoolState& pool) {
  nlohmann::ordered_json j;
  j["train_labeled"] = pool.labeled_ids();
  j["train_unlabeled"] = pool.unlabeled_ids();
  j["dev"] = pool.dev;
  j["test"] = pool.test;
  return j.dump(1) + "\n";
}

}  // namespace distal
