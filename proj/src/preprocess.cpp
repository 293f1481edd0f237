#include "ecgnet/preprocess.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ecgnet/error.hpp"

namespace ecgnet {

void FilterSpec::validate() const {
  require(fs > 0.0, "filter sample rate must be positive");
  require(low_cut > 0.0 && low_cut < high_cut && high_cut < fs / 2.0,
          "filter cutoffs must satisfy 0 < low < high < fs/2");
  require(num_taps >= 3 && num_taps % 2 == 1, "filter tap count must be odd and >= 3");
}

std::vector<double> standardize(std::span<const double> samples) {
  require(!samples.empty(), "cannot standardize an empty signal");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  std::vector<double> out(samples.size(), 0.0);
  if (sd < 1e-12) return out;
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = (samples[i] - mean) / sd;
  return out;
}

namespace {

// Windowed-sinc low-pass with cutoff `fc` in cycles/sample, unit DC gain.
std::vector<double> lowpass_kernel(double fc, const std::vector<double>& window) {
  const std::size_t n = window.size();
  const std::size_t mid = (n - 1) / 2;
  std::vector<double> h(n);
  for (std::size_t k = 0; k <= mid; ++k) {
    const double m = static_cast<double>(k) - static_cast<double>(mid);
    const double v = m == 0.0 ? 2.0 * fc
                              : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    h[k] = v * window[k];
    h[n - 1 - k] = h[k];
  }
  const double dc = std::accumulate(h.begin(), h.end(), 0.0);
  for (auto& v : h) v /= dc;
  return h;
}

}  // namespace

FirFilter design_bandpass(const FilterSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_taps;
  std::vector<double> window(n);
  for (std::size_t k = 0; k < n; ++k) {
    window[k] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                       static_cast<double>(n - 1));
  }
  const auto high = lowpass_kernel(spec.high_cut / spec.fs, window);
  const auto low = lowpass_kernel(spec.low_cut / spec.fs, window);
  FirFilter filt;
  filt.taps.resize(n);
  for (std::size_t k = 0; k <= (n - 1) / 2; ++k) {
    filt.taps[k] = high[k] - low[k];
    filt.taps[n - 1 - k] = filt.taps[k];
  }
  return filt;
}

std::vector<double> apply_filter(std::span<const double> samples, const FirFilter& filter) {
  const std::size_t n = samples.size();
  const std::size_t taps = filter.taps.size();
  require(taps >= 1 && taps % 2 == 1, "filter must have an odd number of taps");
  require(n > taps, "signal of length " + std::to_string(n) + " is shorter than the " +
                        std::to_string(taps) + "-tap filter");
  const std::size_t delay = filter.group_delay();

  // Reflection without repeating the edge sample: x[-k] = x[k], x[n-1+k] = x[n-1-k].
  std::vector<double> padded(n + 2 * delay);
  for (std::size_t i = 0; i < delay; ++i) {
    padded[i] = samples[delay - i];
    padded[delay + n + i] = samples[n - 2 - i];
  }
  std::copy(samples.begin(), samples.end(), padded.begin() + static_cast<std::ptrdiff_t>(delay));

  // y[i] = sum_k h[k] x[i + delay - k]; symmetric taps make this a correlation.
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = padded.data() + i;
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) acc += filter.taps[taps - 1 - k] * x[k];
    out[i] = acc;
  }
  return out;
}

std::vector<double> truncate(std::span<const double> samples, std::size_t max_len) {
  const auto n = std::min(samples.size(), max_len);
  return {samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n)};
}

Record preprocess_record(const Record& rec, const FirFilter& filter, std::size_t max_len) {
  Record out{rec.id, {}, rec.fs, rec.label};
  const auto standardized = standardize(rec.samples);
  out.samples = truncate(apply_filter(standardized, filter), max_len);
  return out;
}

Record preprocess_record(const Record& rec, const FilterSpec& spec, std::size_t max_len) {
  require(rec.fs == spec.fs, "record '" + rec.id + "' sample rate does not match the filter");
  return preprocess_record(rec, design_bandpass(spec), max_len);
}

}  // namespace ecgnet
