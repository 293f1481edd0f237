#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ecgnet {

// Dual-slope detector parameters. Slope windows are in samples, the
// refractory period in seconds. Defaults assume a standardized 300 Hz signal.
struct DualSlopeParams {
  std::size_t k_min = 8;     // ~27 ms
  std::size_t k_max = 19;    // ~63 ms
  double refractory = 0.2;
  double theta_init = 2.0e-2;
  double theta_fraction = 0.7;
  std::size_t history = 8;
  double learning_window = 2.0;  // seconds scanned to seed the threshold
  double refine_window = 0.05;   // seconds either side for apex refinement

  void validate() const;
};

struct BeatAnnotations {
  std::vector<std::size_t> peaks;  // strictly increasing sample indices
  std::vector<double> rr;          // seconds
};

// max(max_k S_L + max_k S_R, -min_k S_L - min_k S_R) with
// S_L(k) = (x[i] - x[i-k]) / k and S_R(k) = (x[i] - x[i+k]) / k over
// k in [k_min, k_max]. Requires k_max <= i < len - k_max.
double dual_slope_score(std::span<const double> samples, std::size_t i, const DualSlopeParams& p);

// Scores for every index; indices outside the valid range score 0.
std::vector<double> dual_slope_scores(std::span<const double> samples, const DualSlopeParams& p);

// Local maxima of the score above an adaptive threshold, one per refractory
// window, refined to the largest |x| within +-refine_window.
//
// The threshold starts at theta_fraction times the strongest candidate in the
// first learning_window seconds (candidates must reach theta_init), then
// tracks theta_fraction times the mean score of the last `history` beats,
// floored at theta_init / 4.
BeatAnnotations detect_r_peaks(std::span<const double> samples, double fs, const DualSlopeParams& p = {});

std::vector<double> rr_intervals(std::span<const std::size_t> peaks, double fs);

}  // namespace ecgnet
