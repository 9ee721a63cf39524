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
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "distal/errors.hpp"
#include "distal/rng.hpp"

namespace distal {

enum class FirstCenter {
  uniform,       // classic k-means++
  squared_norm,  // gradient-embedding variant: first pick weighted by |x|^2
};

namespace detail {

// Draws an index with probability weight[i] / sum(weight) by scanning the
// cumulative sum in index order. When the total is zero, draws uniformly
// among indices not yet `taken`.
inline Eigen::Index weighted_draw(const Eigen::VectorXd& weight, const std::vector<bool>& taken, Rng& rng) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < weight.size(); ++i)
    if (!taken[static_cast<std::size_t>(i)]) total += weight(i);
  if (total > 0.0) {
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    Eigen::Index last = -1;
    for (Eigen::Index i = 0; i < weight.size(); ++i) {
      if (taken[static_cast<std::size_t>(i)] || weight(i) <= 0.0) continue;
      acc += weight(i);
      last = i;
      if (acc > target) return i;
    }
    return last;  // rounding left target at the very top of the range
  }
  std::vector<Eigen::Index> rest;
  for (Eigen::Index i = 0; i < weight.size(); ++i)
    if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
  return rest[uniform_index(rng, rest.size())];
}

}  // namespace detail

/// D^2 seeding over the columns of `points`; returns k distinct column
/// indices in pick order.
template <typename Derived>
std::vector<Eigen::Index> kmeanspp_seed(const Eigen::MatrixBase<Derived>& points, std::size_t k, Rng& rng,
                                        FirstCenter first = FirstCenter::uniform) {
  const Eigen::Index n = points.cols();
  if (k < 1 || static_cast<Eigen::Index>(k) > n) throw ArgumentError("k-means++: need 1 <= k <= number of points");

  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> picks;
  picks.reserve(k);
  Eigen::VectorXd weight;

  Eigen::Index pick;
  if (first == FirstCenter::uniform) {
    pick = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  } else {
    weight = points.colwise().squaredNorm().transpose().template cast<double>();
    pick = detail::weighted_draw(weight, taken, rng);
  }

  weight = (points.colwise() - points.col(pick)).colwise().squaredNorm().transpose().template cast<double>();
  while (true) {
    taken[static_cast<std::size_t>(pick)] = true;
    picks.push_back(pick);
    weight(pick) = 0.0;
    if (picks.size() == k) break;
    pick = detail::weighted_draw(weight, taken, rng);
    const Eigen::VectorXd d =
        (points.colwise() - points.col(pick)).colwise().squaredNorm().transpose().template cast<double>();
    weight = weight.cwiseMin(d);
  }
  return picks;
}

struct ClusterAssignment {
  Eigen::MatrixXd centroids;        // dims x k
  std::vector<int> labels;          // per point
  std::vector<double> inertia_trace;  // after each assignment step
  int iterations = 0;

  double inertia() const { return inertia_trace.empty() ? 0.0 : inertia_trace.back(); }
};

namespace detail {

inline double assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& labels) {
  double inertia = 0.0;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    Eigen::Index best = 0;
    const double d = (centroids.colwise() - points.col(j)).colwise().squaredNorm().minCoeff(&best);
    labels[static_cast<std::size_t>(j)] = static_cast<int>(best);
    inertia += d;
  }
  return inertia;
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iters` updates have run. Empty clusters keep their
/// previous centroid.
inline ClusterAssignment kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed,
                                int max_iters = 100) {
  if (k < 1) throw ArgumentError("kmeans: k must be >= 1");
  if (static_cast<Eigen::Index>(k) > points.cols()) throw ArgumentError("kmeans: fewer points than clusters");
  Rng rng = make_stream(seed, "kmeans");
  const auto seeds = kmeanspp_seed(points, k, rng, FirstCenter::uniform);

  ClusterAssignment out;
  out.centroids.resize(points.rows(), static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) out.centroids.col(static_cast<Eigen::Index>(c)) = points.col(seeds[c]);
  out.labels.assign(static_cast<std::size_t>(points.cols()), -1);
  out.inertia_trace.push_back(detail::assign(points, out.centroids, out.labels));

  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), static_cast<Eigen::Index>(k));
    std::vector<int> counts(k, 0);
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      const int c = out.labels[static_cast<std::size_t>(j)];
      sums.col(c) += points.col(j);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) out.centroids.col(static_cast<Eigen::Index>(c)) = sums.col(static_cast<Eigen::Index>(c)) / counts[c];
    }
    std::vector<int> next(out.labels.size());
    const double inertia = detail::assign(points, out.centroids, next);
    out.inertia_trace.push_back(inertia);
    ++out.iterations;
    if (next == out.labels) break;
    out.labels = std::move(next);
  }
  return out;
}

}  // namespace distal
