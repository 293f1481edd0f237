#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ecgnet/nn/layers.hpp"
#include "ecgnet/nn/tensor.hpp"

namespace ecgnet::nn {

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // which element produced max_rel_error
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero gradients from
// turning round-off into a large ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-2) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares analytic gradients of `layer` against central differences of the
// scalar probe loss sum(r * layer(x)), where r is a fixed random tensor.
// Every parameter element and every input element is perturbed. `reset` runs
// before each forward pass so stochastic layers can replay the same draw.
inline GradientCheckResult gradient_check(Layer<double>& layer, const Tensor<double>& input,
                                          std::uint64_t seed = 0, double eps = 1e-5,
                                          const std::function<void()>& reset = {}) {
  auto run = [&](const Tensor<double>& x) {
    if (reset) reset();
    return layer.forward(x);
  };

  const Tensor<double> y0 = run(input);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Tensor<double> probe(y0.shape());
  for (auto& v : probe.data()) v = unit(rng);

  auto loss = [&](const Tensor<double>& x) {
    const auto y = run(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += probe[i] * y[i];
    return s;
  };

  const auto params = layer.parameters();
  zero_grads(params);
  run(input);
  const Tensor<double> dx = layer.backward(probe);

  // Snapshot analytic parameter grads before finite differences overwrite caches.
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) analytic.emplace_back(p.tensor->grad().begin(), p.tensor->grad().end());

  GradientCheckResult result;
  auto record = [&](double a, double n, const std::string& what) {
    const double e = relative_error(a, n);
    ++result.checked;
    if (result.checked == 1 || e > result.max_rel_error) {
      result.max_rel_error = e;
      result.worst = what;
    }
  };

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& t = *params[pi].tensor;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t[i];
      t[i] = orig + eps;
      const double lp = loss(input);
      t[i] = orig - eps;
      const double lm = loss(input);
      t[i] = orig;
      record(analytic[pi][i], (lp - lm) / (2.0 * eps), params[pi].name + "[" + std::to_string(i) + "]");
    }
  }

  Tensor<double> x = input;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double lp = loss(x);
    x[i] = orig - eps;
    const double lm = loss(x);
    x[i] = orig;
    record(dx[i], (lp - lm) / (2.0 * eps), "input[" + std::to_string(i) + "]");
  }
  return result;
}

}  // namespace ecgnet::nn
