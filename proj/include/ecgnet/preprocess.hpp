#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ecgnet/record_io.hpp"

namespace ecgnet {

// Band-pass design request. Defaults give a 3-45 Hz, 601-tap filter at 300 Hz.
struct FilterSpec {
  double low_cut = 3.0;
  double high_cut = 45.0;
  double fs = 300.0;
  std::size_t num_taps = 601;

  void validate() const;
};

// Linear-phase FIR filter; taps are symmetric about the centre tap.
struct FirFilter {
  std::vector<double> taps;

  std::size_t group_delay() const { return (taps.size() - 1) / 2; }
};

inline constexpr std::size_t kDefaultMaxLength = 9000;

// Zero mean, unit population standard deviation. Signals whose deviation is
// below 1e-12 map to all zeros.
std::vector<double> standardize(std::span<const double> samples);

// Hamming-windowed sinc band-pass built as the difference of two low-pass
// kernels, each normalised to unit DC gain.
FirFilter design_bandpass(const FilterSpec& spec);

// Zero-phase application: reflection-padded convolution shifted back by the
// group delay. Output length equals input length.
std::vector<double> apply_filter(std::span<const double> samples, const FirFilter& filter);

std::vector<double> truncate(std::span<const double> samples, std::size_t max_len = kDefaultMaxLength);

// standardize -> apply_filter -> truncate.
Record preprocess_record(const Record& rec, const FilterSpec& spec,
                         std::size_t max_len = kDefaultMaxLength);

// Same as above with a pre-designed filter, for batch use.
Record preprocess_record(const Record& rec, const FirFilter& filter,
                         std::size_t max_len = kDefaultMaxLength);

}  // namespace ecgnet
