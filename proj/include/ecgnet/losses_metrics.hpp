#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecgnet/error.hpp"
#include "ecgnet/nn/tensor.hpp"

namespace ecgnet {

struct FocalConfig {
  double gamma = 2.0;

  void validate() const { require(gamma >= 0.0 && std::isfinite(gamma), "focal gamma must be >= 0"); }
};

// Probabilities are clamped into [kProbFloor, 1] before taking logs.
inline constexpr double kProbFloor = 1e-12;

template <typename T>
struct LossAndGrad {
  double loss = 0.0;       // batch mean
  nn::Tensor<T> grad;      // d(mean loss) / d(probs)
};

namespace detail {

template <typename T>
void check_targets(const nn::Tensor<T>& probs, std::span<const std::size_t> targets) {
  if (probs.rank() != 2) throw Error("loss: probabilities must be [batch, classes]");
  if (targets.size() != probs.dim(0)) throw Error("loss: target count does not match batch size");
  for (const auto t : targets) {
    if (t >= probs.dim(1)) throw Error("loss: target index " + std::to_string(t) + " >= class count");
  }
}

inline double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0); }

}  // namespace detail

// -(1 - p)^gamma * log(p) for the target probability of each row.
template <typename T>
std::vector<double> focal_losses(const nn::Tensor<T>& probs, std::span<const std::size_t> targets,
                                 const FocalConfig& cfg) {
  cfg.validate();
  detail::check_targets(probs, targets);
  const std::size_t k = probs.dim(1);
  std::vector<double> out(targets.size());
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const double p = detail::clamp_prob(static_cast<double>(probs[r * k + targets[r]]));
    const double weight = cfg.gamma == 0.0 ? 1.0 : std::pow(1.0 - p, cfg.gamma);
    out[r] = -weight * std::log(p);
  }
  return out;
}

template <typename T>
double focal_loss(const nn::Tensor<T>& probs, std::span<const std::size_t> targets, const FocalConfig& cfg) {
  const auto losses = focal_losses(probs, targets, cfg);
  if (losses.empty()) return 0.0;
  double s = 0.0;
  for (const double v : losses) s += v;
  return s / static_cast<double>(losses.size());
}

template <typename T>
double cross_entropy(const nn::Tensor<T>& probs, std::span<const std::size_t> targets) {
  detail::check_targets(probs, targets);
  const std::size_t k = probs.dim(1);
  if (targets.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    s += -std::log(detail::clamp_prob(static_cast<double>(probs[r * k + targets[r]])));
  }
  return s / static_cast<double>(targets.size());
}

// Mean focal loss and its gradient with respect to the probabilities. Rows
// whose target probability sits below the clamp floor get zero gradient.
template <typename T>
LossAndGrad<T> focal_loss_with_grad(const nn::Tensor<T>& probs, std::span<const std::size_t> targets,
                                    const FocalConfig& cfg) {
  LossAndGrad<T> out{focal_loss(probs, targets, cfg), nn::Tensor<T>(probs.shape())};
  const std::size_t k = probs.dim(1);
  const double inv_n = 1.0 / static_cast<double>(targets.size());
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const double raw = static_cast<double>(probs[r * k + targets[r]]);
    if (raw < kProbFloor) continue;
    const double p = std::min(raw, 1.0);
    const double q = 1.0 - p;
    double g = cfg.gamma == 0.0 ? -1.0 / p : -std::pow(q, cfg.gamma) / p;
    if (cfg.gamma != 0.0 && q > 0.0) g += cfg.gamma * std::pow(q, cfg.gamma - 1.0) * std::log(p);
    out.grad[r * k + targets[r]] = static_cast<T>(g * inv_n);
  }
  return out;
}

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes, 0) {}

  void add(std::size_t truth, std::size_t predicted);

  std::size_t classes() const { return k_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * k_ + predicted); }
  std::size_t total() const;

  std::size_t true_positives(std::size_t k) const;
  std::size_t false_positives(std::size_t k) const;
  std::size_t false_negatives(std::size_t k) const;
  std::size_t true_negatives(std::size_t k) const;
  std::size_t support(std::size_t k) const { return true_positives(k) + false_negatives(k); }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t classes);

// One-vs-rest TN / (TN + FP); 1 when there are no negatives.
double specificity(const ConfusionMatrix& cm, std::size_t k);
// TP / (TP + FP); 0 when nothing was predicted as k.
double precision(const ConfusionMatrix& cm, std::size_t k);
// TP / (TP + FN); 0 when k has no support.
double recall(const ConfusionMatrix& cm, std::size_t k);
// 2TP / (2TP + FN + FP); 0 when the denominator is 0.
double f1(const ConfusionMatrix& cm, std::size_t k);
// Support-weighted mean of per-class F1; 0 for an empty matrix.
double weighted_f1(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double specificity = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  ConfusionMatrix confusion{0};
  std::vector<ClassMetrics> per_class;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
};

MetricsReport make_report(const ConfusionMatrix& cm);
nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& report);

}  // namespace ecgnet
