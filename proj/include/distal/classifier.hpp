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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "distal/errors.hpp"
#include "distal/rng.hpp"

namespace distal {

// Floor applied inside every log of a probability.
inline constexpr double kProbFloor = 1e-12;

enum class Arch { linear, mlp1 };

inline std::string to_string(Arch a) { return a == Arch::linear ? "linear" : "mlp1"; }

inline Arch parse_arch(const std::string& s) {
  if (s == "linear") return Arch::linear;
  if (s == "mlp1") return Arch::mlp1;
  throw ArgumentError("unknown architecture '" + s + "' (expected linear | mlp1)");
}

/// Parameters of a softmax classifier.
///
/// linear: logits = w2 x + b2, with w2 in R^{C x d}.
/// mlp1:   a = tanh(w1 x + b1), logits = w2 a + b2, with w1 in R^{h x d},
///         w2 in R^{C x h}.
///
/// The same struct doubles as the gradient container.
template <typename Scalar>
struct ModelParams {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Arch arch = Arch::linear;
  int dims = 0;
  int hidden = 0;
  int classes = 0;
  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;

  static ModelParams zeros(Arch arch, int dims, int hidden, int classes) {
    if (dims < 1 || classes < 2 || (arch == Arch::mlp1 && hidden < 1)) {
      throw ShapeError("invalid model shape");
    }
    ModelParams p;
    p.arch = arch;
    p.dims = dims;
    p.classes = classes;
    p.hidden = arch == Arch::mlp1 ? hidden : 0;
    if (arch == Arch::mlp1) {
      p.w1 = Mat::Zero(hidden, dims);
      p.b1 = Vec::Zero(hidden);
    }
    p.w2 = Mat::Zero(classes, p.penult_dims());
    p.b2 = Vec::Zero(classes);
    return p;
  }

  ModelParams zeros_like() const { return zeros(arch, dims, hidden, classes); }

  int penult_dims() const { return arch == Arch::mlp1 ? hidden : dims; }

  Eigen::Index size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  bool all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  }

  void check_shapes() const {
    const bool ok = w2.rows() == classes && w2.cols() == penult_dims() && b2.size() == classes &&
                    (arch == Arch::linear ? (w1.size() == 0 && b1.size() == 0)
                                          : (w1.rows() == hidden && w1.cols() == dims &&
                                             b1.size() == hidden));
    if (!ok) throw ShapeError("model parameter shapes inconsistent with (d, h, C)");
  }

  // Visits (w1, b1, w2, b2) in the fixed flat order.
  template <typename F>
  void for_each_block(F&& f) {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
  }
  template <typename F>
  void for_each_block(F&& f) const {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
  }

  ModelParams& operator+=(const ModelParams& o) {
    w1 += o.w1;
    b1 += o.b1;
    w2 += o.w2;
    b2 += o.b2;
    return *this;
  }

  bool operator==(const ModelParams& o) const {
    return arch == o.arch && dims == o.dims && hidden == o.hidden && classes == o.classes &&
           w1 == o.w1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
  }
};

template <typename Scalar>
using Gradient = ModelParams<Scalar>;

/// Flat parameter vector: w1 (row-major), b1, w2 (row-major), b2.
template <typename Scalar>
typename ModelParams<Scalar>::Vec flatten(const ModelParams<Scalar>& p) {
  typename ModelParams<Scalar>::Vec out(p.size());
  Eigen::Index k = 0;
  p.for_each_block([&](const auto& block) {
    for (Eigen::Index r = 0; r < block.rows(); ++r)
      for (Eigen::Index c = 0; c < block.cols(); ++c) out(k++) = block(r, c);
  });
  return out;
}

template <typename Scalar>
void unflatten(ModelParams<Scalar>& p, const typename ModelParams<Scalar>::Vec& flat) {
  if (flat.size() != p.size()) throw ShapeError("flat parameter vector has wrong length");
  Eigen::Index k = 0;
  p.for_each_block([&](auto& block) {
    for (Eigen::Index r = 0; r < block.rows(); ++r)
      for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = flat(k++);
  });
}

/// Xavier-uniform weights, zero biases.
template <typename Scalar>
ModelParams<Scalar> init_params(Arch arch, int dims, int hidden, int classes, Rng& rng) {
  auto p = ModelParams<Scalar>::zeros(arch, dims, hidden, classes);
  auto fill = [&rng](auto& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * limit);
  };
  if (arch == Arch::mlp1) fill(p.w1);
  fill(p.w2);
  return p;
}

template <typename Scalar>
struct ForwardOutput {
  typename ModelParams<Scalar>::Vec logits;
  typename ModelParams<Scalar>::Vec probs;
  typename ModelParams<Scalar>::Vec penult;
};

// Column-stacked forward results for a batch of inputs.
template <typename Scalar>
struct BatchOutput {
  typename ModelParams<Scalar>::Mat logits;  // C x n
  typename ModelParams<Scalar>::Mat probs;   // C x n
  typename ModelParams<Scalar>::Mat penult;  // h x n (d x n for linear)
};

/// Softmax via log-sum-exp.
template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  using std::exp;
  using std::log;
  const Scalar shift = logits.maxCoeff();
  const Scalar lse = shift + log((logits.array() - shift).exp().sum());
  return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>((logits.array() - lse).exp().matrix());
}

template <typename Scalar, typename Derived>
ForwardOutput<Scalar> forward(const ModelParams<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != p.dims) {
    throw ShapeError("forward: input has " + std::to_string(x.size()) + " features, model expects " +
                     std::to_string(p.dims));
  }
  ForwardOutput<Scalar> out;
  if (p.arch == Arch::mlp1) {
    out.penult = (p.w1 * x + p.b1).array().tanh().matrix();
  } else {
    out.penult = x;
  }
  out.logits = p.w2 * out.penult + p.b2;
  out.probs = softmax(out.logits);
  return out;
}

/// Column-by-column forward; every column is bit-identical to `forward` on
/// that input alone.
template <typename Scalar, typename Derived>
BatchOutput<Scalar> forward_batch(const ModelParams<Scalar>& p, const Eigen::MatrixBase<Derived>& X) {
  if (X.rows() != p.dims) throw ShapeError("forward_batch: input rows != model dims");
  BatchOutput<Scalar> out;
  out.logits.resize(p.classes, X.cols());
  out.probs.resize(p.classes, X.cols());
  out.penult.resize(p.penult_dims(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    auto f = forward(p, X.col(j));
    out.logits.col(j) = f.logits;
    out.probs.col(j) = f.probs;
    out.penult.col(j) = f.penult;
  }
  return out;
}

/// Lowest index among maximal entries.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return static_cast<int>(best);
}

template <typename Scalar, typename Derived>
std::vector<int> predict(const ModelParams<Scalar>& p, const Eigen::MatrixBase<Derived>& X) {
  const auto out = forward_batch(p, X);
  std::vector<int> labels(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) labels[static_cast<std::size_t>(j)] = argmax(out.probs.col(j));
  return labels;
}

struct FloorEvents {
  std::size_t count = 0;
};

/// -log probs[label], with the probability floored at kProbFloor. A floor hit
/// is counted in `events` when given.
template <typename Derived>
typename Derived::Scalar loss_ce(const Eigen::MatrixBase<Derived>& probs, int label,
                                 FloorEvents* events = nullptr) {
  using Scalar = typename Derived::Scalar;
  using std::log;
  if (label < 0 || label >= probs.size()) {
    throw ArgumentError("loss_ce: label " + std::to_string(label) + " out of range");
  }
  Scalar p = probs(label);
  if (p < Scalar(kProbFloor)) {
    p = Scalar(kProbFloor);
    if (events) ++events->count;
  }
  return -log(p);
}

/// KL(teacher || student) = sum_c t_c ln(t_c / s_c). Zero-mass teacher entries
/// contribute nothing; student entries are floored at kProbFloor.
template <typename DerivedT, typename DerivedS>
typename DerivedT::Scalar loss_kl(const Eigen::MatrixBase<DerivedT>& teacher,
                                  const Eigen::MatrixBase<DerivedS>& student) {
  using Scalar = typename DerivedT::Scalar;
  using std::log;
  using std::max;
  if (teacher.size() != student.size()) throw ShapeError("loss_kl: length mismatch");
  Scalar total(0);
  for (Eigen::Index c = 0; c < teacher.size(); ++c) {
    const Scalar t = teacher(c);
    if (t <= Scalar(0)) continue;
    total += t * (log(t) - log(max(student(c), Scalar(kProbFloor))));
  }
  return max(total, Scalar(0));
}

/// Training examples as columns. `teacher` is either empty (no distillation)
/// or C x n. `teacher_mask`, when non-empty, marks which columns carry a
/// teacher; masked-out columns contribute CE only.
template <typename Scalar>
struct Batch {
  typename ModelParams<Scalar>::Mat X;
  std::vector<int> labels;
  typename ModelParams<Scalar>::Mat teacher;
  std::vector<std::uint8_t> teacher_mask;

  Eigen::Index size() const { return X.cols(); }
  bool has_teacher() const { return teacher.cols() > 0; }
  bool distills(Eigen::Index j) const {
    return has_teacher() && (teacher_mask.empty() || teacher_mask[static_cast<std::size_t>(j)] != 0);
  }

  Batch subset(std::span<const Eigen::Index> cols) const {
    Batch b;
    b.X.resize(X.rows(), static_cast<Eigen::Index>(cols.size()));
    if (has_teacher()) b.teacher.resize(teacher.rows(), static_cast<Eigen::Index>(cols.size()));
    if (!teacher_mask.empty()) b.teacher_mask.reserve(cols.size());
    b.labels.reserve(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto j = cols[k];
      b.X.col(static_cast<Eigen::Index>(k)) = X.col(j);
      b.labels.push_back(labels[static_cast<std::size_t>(j)]);
      if (has_teacher()) b.teacher.col(static_cast<Eigen::Index>(k)) = teacher.col(j);
      if (!teacher_mask.empty()) b.teacher_mask.push_back(teacher_mask[static_cast<std::size_t>(j)]);
    }
    return b;
  }
};

template <typename Scalar>
void validate_batch(const ModelParams<Scalar>& p, const Batch<Scalar>& batch) {
  if (batch.size() == 0) throw ShapeError("empty batch");
  if (batch.X.rows() != p.dims) throw ShapeError("batch feature rows != model dims");
  if (static_cast<Eigen::Index>(batch.labels.size()) != batch.size()) {
    throw ShapeError("batch label count != column count");
  }
  for (int y : batch.labels) {
    if (y < 0 || y >= p.classes) throw ArgumentError("batch label " + std::to_string(y) + " out of range");
  }
  if (batch.has_teacher() && (batch.teacher.rows() != p.classes || batch.teacher.cols() != batch.size())) {
    throw ShapeError("teacher probabilities must be C x batch");
  }
  if (!batch.teacher_mask.empty() &&
      static_cast<Eigen::Index>(batch.teacher_mask.size()) != batch.size()) {
    throw ShapeError("teacher mask length != batch size");
  }
}

/// Mean over the batch of CE(y, f(x)) + alpha * KL(teacher || f(x)).
template <typename Scalar>
Scalar objective(const ModelParams<Scalar>& p, const Batch<Scalar>& batch, Scalar alpha) {
  validate_batch(p, batch);
  const auto out = forward_batch(p, batch.X);
  Scalar total(0);
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    total += loss_ce(out.probs.col(j), batch.labels[static_cast<std::size_t>(j)]);
    if (alpha != Scalar(0) && batch.distills(j)) total += alpha * loss_kl(batch.teacher.col(j), out.probs.col(j));
  }
  return total / static_cast<Scalar>(batch.size());
}

namespace detail {

// Shared backward pass. The logit-space error for one sample is
// (p - onehot(y)) + alpha * (p - t), which is d/dz of CE + alpha * KL(t || softmax(z)).
template <typename Scalar>
Gradient<Scalar> backward(const ModelParams<Scalar>& p, const Batch<Scalar>& batch, Scalar alpha) {
  using Mat = typename ModelParams<Scalar>::Mat;
  const Eigen::Index n = batch.size();
  Mat pre;
  Mat act;
  if (p.arch == Arch::mlp1) {
    pre = (p.w1 * batch.X).colwise() + p.b1;
    act = pre.array().tanh().matrix();
  }
  const Mat& penult = p.arch == Arch::mlp1 ? act : batch.X;
  Mat logits = (p.w2 * penult).colwise() + p.b2;

  Mat delta(p.classes, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto probs = softmax(logits.col(j));
    delta.col(j) = probs;
    delta(batch.labels[static_cast<std::size_t>(j)], j) -= Scalar(1);
    if (alpha != Scalar(0) && batch.distills(j)) delta.col(j) += alpha * (probs - batch.teacher.col(j));
  }
  delta /= static_cast<Scalar>(n);

  Gradient<Scalar> g = p.zeros_like();
  g.w2.noalias() = delta * penult.transpose();
  g.b2 = delta.rowwise().sum();
  if (p.arch == Arch::mlp1) {
    Mat dpre = (p.w2.transpose() * delta).array() * (Scalar(1) - act.array().square());
    g.w1.noalias() = dpre * batch.X.transpose();
    g.b1 = dpre.rowwise().sum();
  }
  return g;
}

}  // namespace detail

/// Exact gradient of `objective`. Teacher probabilities must be given for
/// every example or none.
template <typename Scalar>
Gradient<Scalar> grad_batch(const ModelParams<Scalar>& p, const Batch<Scalar>& batch, Scalar alpha) {
  validate_batch(p, batch);
  if (!(alpha >= Scalar(0))) throw ArgumentError("alpha must be >= 0");
  if (!batch.teacher_mask.empty()) {
    throw ArgumentError("grad_batch: teacher probabilities must be present for all examples or none");
  }
  return detail::backward(p, batch, alpha);
}

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 10;
  int batch_size = 50;
  double alpha = 0.75;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ArgumentError("train.learning_rate must be > 0");
    if (epochs < 1) throw ArgumentError("train.epochs must be >= 1");
    if (batch_size < 1) throw ArgumentError("train.batch_size must be >= 1");
    if (!(alpha >= 0.0)) throw ArgumentError("train.alpha must be >= 0");
  }
};

template <typename Scalar>
class Adam {
 public:
  Adam(const ModelParams<Scalar>& like, const TrainConfig& cfg)
      : cfg_(cfg), m_(like.zeros_like()), v_(like.zeros_like()) {}

  void step(ModelParams<Scalar>& p, const Gradient<Scalar>& g) {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(cfg_.beta1);
    const Scalar b2 = static_cast<Scalar>(cfg_.beta2);
    const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(t_));
    const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(t_));
    const Scalar lr = static_cast<Scalar>(cfg_.learning_rate);
    const Scalar eps = static_cast<Scalar>(cfg_.adam_eps);
    auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
      m = b1 * m + (Scalar(1) - b1) * grad;
      v = b2 * v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    update(p.w1, g.w1, m_.w1, v_.w1);
    update(p.b1, g.b1, m_.b1, v_.b1);
    update(p.w2, g.w2, m_.w2, v_.w2);
    update(p.b2, g.b2, m_.b2, v_.b2);
  }

 private:
  TrainConfig cfg_;
  ModelParams<Scalar> m_;
  ModelParams<Scalar> v_;
  long t_ = 0;
};

template <typename Scalar>
struct TrainResult {
  ModelParams<Scalar> best;
  std::vector<double> epoch_val_accuracy;
  int best_epoch = 0;  // 1-based
};

/// Mini-batch Adam on the distillation objective, starting from `init`.
/// After each epoch `dev_accuracy` scores the current parameters; the
/// snapshot with the highest score is returned (earliest epoch on ties).
/// Batch order is drawn from `batch_rng`.
template <typename Scalar>
TrainResult<Scalar> train(const ModelParams<Scalar>& init, const Batch<Scalar>& data,
                          const TrainConfig& cfg,
                          const std::type_identity_t<std::function<double(const ModelParams<Scalar>&)>>& dev_accuracy,
                          Rng& batch_rng) {
  cfg.validate();
  if (data.size() == 0) throw TrainingError("cannot train on an empty labeled pool");
  validate_batch(init, data);

  ModelParams<Scalar> params = init;
  Adam<Scalar> opt(params, cfg);
  const auto alpha = static_cast<Scalar>(cfg.alpha);
  const Eigen::Index n = data.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));

  TrainResult<Scalar> result;
  double best_acc = -std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(batch_rng, i)]);

    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - start);
      const auto mb = data.subset(std::span<const Eigen::Index>(order).subspan(
          static_cast<std::size_t>(start), static_cast<std::size_t>(len)));
      opt.step(params, detail::backward(params, mb, alpha));
    }
    if (!params.all_finite()) throw TrainingError("parameters diverged to non-finite values");

    const double acc = dev_accuracy(params);
    result.epoch_val_accuracy.push_back(acc);
    if (acc > best_acc) {
      best_acc = acc;
      result.best = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

/// JSON layout: {"arch", "dims", "hidden", "classes", "values"} where
/// "values" is the flat vector from `flatten`.
template <typename Scalar>
nlohmann::ordered_json params_to_json(const ModelParams<Scalar>& p) {
  nlohmann::ordered_json j;
  j["arch"] = to_string(p.arch);
  j["dims"] = p.dims;
  j["hidden"] = p.hidden;
  j["classes"] = p.classes;
  const auto flat = flatten(p);
  std::vector<double> values(static_cast<std::size_t>(flat.size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) values[static_cast<std::size_t>(i)] = static_cast<double>(flat(i));
  j["values"] = values;
  return j;
}

template <typename Scalar>
ModelParams<Scalar> params_from_json(const nlohmann::json& j) {
  auto p = ModelParams<Scalar>::zeros(parse_arch(j.at("arch").get<std::string>()), j.at("dims").get<int>(),
                                      j.at("hidden").get<int>(), j.at("classes").get<int>());
  const auto values = j.at("values").get<std::vector<double>>();
  typename ModelParams<Scalar>::Vec flat(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) flat(static_cast<Eigen::Index>(i)) = static_cast<Scalar>(values[i]);
  unflatten(p, flat);
  if (!p.all_finite()) throw ParseError("model parameters contain non-finite values");
  return p;
}

using Model = ModelParams<double>;

}  // namespace distal
