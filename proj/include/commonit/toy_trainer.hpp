#pragma once

// Desk-scale stand-in for instruction tuning: a linear softmax classifier
// trained by plain mini-batch SGD on synthetic multi-task data, driven by a
// Schedule exactly as an LLM trainer would consume the manifest.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "commonit/common.hpp"
#include "commonit/grouping.hpp"
#include "commonit/scheduler.hpp"

namespace commonit {

struct ToyExample {
  std::string id;
  Eigen::VectorXd features;
  int label = 0;
  std::string group;
};

// Weights (classes x dim) and bias (classes). Also used for gradients.
template <typename Scalar>
struct BasicToyModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weights;
  Vector bias;

  static BasicToyModel zeros(Eigen::Index classes, Eigen::Index dim) {
    return {Matrix::Zero(classes, dim), Vector::Zero(classes)};
  }

  static BasicToyModel gaussian(Eigen::Index classes, Eigen::Index dim,
                                double sigma, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "init");
    BasicToyModel m = zeros(classes, dim);
    for (Eigen::Index i = 0; i < m.weights.size(); ++i)
      m.weights.data()[i] = static_cast<Scalar>(rng.normal(0.0, sigma));
    for (Eigen::Index i = 0; i < m.bias.size(); ++i)
      m.bias(i) = static_cast<Scalar>(rng.normal(0.0, sigma));
    return m;
  }

  Eigen::Index classes() const { return weights.rows(); }
  Eigen::Index dim() const { return weights.cols(); }

  bool all_finite() const { return weights.allFinite() && bias.allFinite(); }

  BasicToyModel& operator-=(const BasicToyModel& o) {
    weights -= o.weights;
    bias -= o.bias;
    return *this;
  }
  BasicToyModel& operator*=(Scalar s) {
    weights *= s;
    bias *= s;
    return *this;
  }
  friend BasicToyModel operator*(Scalar s, BasicToyModel m) { return m *= s; }
  friend BasicToyModel operator-(BasicToyModel a, const BasicToyModel& b) {
    return a -= b;
  }
  bool operator==(const BasicToyModel& o) const {
    return weights == o.weights && bias == o.bias;
  }
};

using ToyModel = BasicToyModel<double>;

namespace detail {

inline const ToyExample& deref(const ToyExample& e) { return e; }
inline const ToyExample& deref(const ToyExample* e) { return *e; }

template <typename Scalar>
typename BasicToyModel<Scalar>::Vector logits(const BasicToyModel<Scalar>& model,
                                              const ToyExample& ex) {
  return model.weights * ex.features.template cast<Scalar>() + model.bias;
}

template <typename Vec>
typename Vec::Scalar log_sum_exp(const Vec& z) {
  const auto m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

}  // namespace detail

// Mean negative log-likelihood of each example's class under the softmax
// model. Batch must be non-empty; elements may be ToyExample or pointers.
template <typename Scalar, typename Range>
Scalar batch_loss(const BasicToyModel<Scalar>& model, const Range& batch) {
  Scalar total(0);
  std::size_t n = 0;
  for (const auto& item : batch) {
    const ToyExample& ex = detail::deref(item);
    const auto z = detail::logits(model, ex);
    total += detail::log_sum_exp(z) - z(ex.label);
    ++n;
  }
  if (n == 0) throw InputError("batch_loss: empty batch");
  return total / static_cast<Scalar>(n);
}

template <typename Scalar, typename Range>
BasicToyModel<Scalar> gradient(const BasicToyModel<Scalar>& model, const Range& batch) {
  auto g = BasicToyModel<Scalar>::zeros(model.classes(), model.dim());
  std::size_t n = 0;
  for (const auto& item : batch) {
    const ToyExample& ex = detail::deref(item);
    auto p = detail::logits(model, ex);
    p = (p.array() - detail::log_sum_exp(p)).exp().matrix();
    p(ex.label) -= Scalar(1);
    g.weights.noalias() += p * ex.features.template cast<Scalar>().transpose();
    g.bias += p;
    ++n;
  }
  if (n == 0) throw InputError("gradient: empty batch");
  g *= Scalar(1) / static_cast<Scalar>(n);
  return g;
}

template <typename Scalar>
int predict(const BasicToyModel<Scalar>& model, const ToyExample& ex) {
  Eigen::Index best;
  detail::logits(model, ex).maxCoeff(&best);
  return static_cast<int>(best);
}

struct SynthConfig {
  std::size_t num_tasks = 3;
  std::size_t per_task = 100;
  std::size_t dim = 8;
  std::size_t classes = 4;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<ToyExample> examples;
  GroupedDataset grouped;  // one group per task, "task0", "task1", ...
  std::size_t classes = 0;
};

// Each task places one cluster per class at a task-specific scale and offset
// (offsets orthogonal to the class prototypes), with a task-specific
// cluster -> class permutation. With zero noise the data is linearly
// separable. Requires classes <= dim.
SyntheticCorpus synthesize_multitask(const SynthConfig& config);

struct TrainConfig {
  double learning_rate = 0.1;
  bool gaussian_init = false;
  double init_sigma = 0.01;
  std::uint64_t seed = 0;
  std::size_t classes = 0;  // 0: inferred as max label + 1
};

struct LossPoint {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::string group;
  double loss = 0.0;

  bool operator==(const LossPoint&) const = default;
};

struct TrainRun {
  TrainConfig config;
  ScheduleMode mode = ScheduleMode::CommonIT;
  std::string data_fingerprint;
  ToyModel initial;
  ToyModel model;
  std::vector<LossPoint> loss_trace;  // loss of each step, before its update
  double final_loss = 0.0;            // mean loss over all examples after training
  std::map<std::string, double> task_accuracy;
  double overall_accuracy = 0.0;
};

std::string fingerprint(const std::vector<ToyExample>& examples);

// Plain SGD over the schedule's steps in order. Throws InputError when a
// scheduled id has no example.
TrainRun train(const Schedule& schedule, const std::vector<ToyExample>& examples,
               const TrainConfig& config);

std::map<std::string, double> task_accuracy(const ToyModel& model,
                                            const std::vector<ToyExample>& examples);

struct AccuracyRow {
  std::string task;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // b - a
};

struct ComparisonReport {
  std::string mode_a, mode_b;
  double final_loss_a = 0.0, final_loss_b = 0.0;
  double final_loss_delta = 0.0;  // b - a
  int gap_sign = 0;               // sign of final_loss_delta
  std::vector<AccuracyRow> accuracy;
  std::vector<double> curve_a, curve_b;
};

ComparisonReport compare_runs(const TrainRun& a, const TrainRun& b);

// Header line then one {epoch, step, group, loss} line per step.
std::string train_run_string(const TrainRun& run);
std::string comparison_string(const ComparisonReport& report);

}  // namespace commonit
