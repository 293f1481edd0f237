#include "ecgnet/qrs_detect.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

#include "ecgnet/error.hpp"

namespace ecgnet {

void DualSlopeParams::validate() const {
  require(k_min > 0 && k_min < k_max, "dual-slope windows must satisfy 0 < k_min < k_max");
  require(refractory > 0.0, "refractory period must be positive");
  require(theta_init > 0.0, "initial threshold must be positive");
  require(theta_fraction > 0.0 && theta_fraction < 1.0, "theta fraction must be in (0, 1)");
  require(history >= 1, "threshold history must hold at least one beat");
  require(learning_window > 0.0, "learning window must be positive");
  require(refine_window >= 0.0, "refine window must be non-negative");
  require(2.0 * refine_window < refractory, "refine window must be under half the refractory period");
}

double dual_slope_score(std::span<const double> x, std::size_t i, const DualSlopeParams& p) {
  if (i < p.k_max || i + p.k_max >= x.size()) {
    throw Error("dual-slope index " + std::to_string(i) + " outside valid range");
  }
  double left_max = -std::numeric_limits<double>::infinity();
  double left_min = std::numeric_limits<double>::infinity();
  double right_max = left_max;
  double right_min = left_min;
  for (std::size_t k = p.k_min; k <= p.k_max; ++k) {
    const double kd = static_cast<double>(k);
    const double sl = (x[i] - x[i - k]) / kd;
    const double sr = (x[i] - x[i + k]) / kd;
    left_max = std::max(left_max, sl);
    left_min = std::min(left_min, sl);
    right_max = std::max(right_max, sr);
    right_min = std::min(right_min, sr);
  }
  return std::max(left_max + right_max, -left_min - right_min);
}

std::vector<double> dual_slope_scores(std::span<const double> x, const DualSlopeParams& p) {
  p.validate();
  std::vector<double> scores(x.size(), 0.0);
  if (x.size() <= 2 * p.k_max) return scores;
  for (std::size_t i = p.k_max; i + p.k_max < x.size(); ++i) scores[i] = dual_slope_score(x, i, p);
  return scores;
}

BeatAnnotations detect_r_peaks(std::span<const double> x, double fs, const DualSlopeParams& p) {
  p.validate();
  require(fs > 0.0, "sample rate must be positive");
  require(x.size() > 2 * p.k_max, "signal too short for dual-slope detection");

  const auto scores = dual_slope_scores(x, p);
  std::vector<std::size_t> candidates;
  for (std::size_t i = p.k_max; i + p.k_max < x.size(); ++i) {
    if (scores[i] > scores[i - 1] && scores[i] >= scores[i + 1]) candidates.push_back(i);
  }

  BeatAnnotations ann;
  if (candidates.empty()) return ann;

  // Seed the threshold from the strongest candidate in the learning window,
  // which opens at the first candidate.
  const auto learning_end = candidates.front() + static_cast<std::size_t>(p.learning_window * fs);
  double seed = 0.0;
  for (const auto c : candidates) {
    if (c >= learning_end) break;
    seed = std::max(seed, scores[c]);
  }
  if (seed < p.theta_init) return ann;

  const double floor = p.theta_init / 4.0;
  const double refractory = p.refractory * fs;
  double theta = std::max(p.theta_fraction * seed, floor);
  std::deque<double> recent;
  std::vector<std::size_t> accepted;

  auto update_theta = [&] {
    const double mean = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
    theta = std::max(p.theta_fraction * mean, floor);
  };

  for (const auto c : candidates) {
    if (scores[c] < theta) continue;
    if (!accepted.empty() && static_cast<double>(c - accepted.back()) <= refractory) {
      if (scores[c] > scores[accepted.back()]) {
        accepted.back() = c;
        recent.back() = scores[c];
        update_theta();
      }
      continue;
    }
    accepted.push_back(c);
    recent.push_back(scores[c]);
    if (recent.size() > p.history) recent.pop_front();
    update_theta();
  }

  const auto half = static_cast<std::size_t>(std::llround(p.refine_window * fs));
  for (const auto c : accepted) {
    const std::size_t lo = c > half ? c - half : 0;
    const std::size_t hi = std::min(c + half, x.size() - 1);
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i) {
      if (std::abs(x[i]) > std::abs(x[best])) best = i;
    }
    // Refinement can pull neighbours together; keep the stronger detection.
    if (!ann.peaks.empty() && static_cast<double>(best) - static_cast<double>(ann.peaks.back()) <= refractory) {
      if (std::abs(x[best]) > std::abs(x[ann.peaks.back()])) ann.peaks.back() = best;
      continue;
    }
    ann.peaks.push_back(best);
  }
  ann.rr = rr_intervals(ann.peaks, fs);
  return ann;
}

std::vector<double> rr_intervals(std::span<const std::size_t> peaks, double fs) {
  require(fs > 0.0, "sample rate must be positive");
  std::vector<double> rr;
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    require(peaks[i] > peaks[i - 1], "peaks must be strictly increasing");
    rr.push_back(static_cast<double>(peaks[i] - peaks[i - 1]) / fs);
  }
  return rr;
}

}  // namespace ecgnet
