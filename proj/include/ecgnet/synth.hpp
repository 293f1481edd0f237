#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ecgnet/record_io.hpp"

namespace ecgnet {

enum class Rhythm { Regular, Irregular, Noisy };

ClassLabel rhythm_label(Rhythm rhythm);

struct SynthSpec {
  double fs = 300.0;
  double duration = 30.0;  // seconds
  double mean_hr = 75.0;   // beats per minute
  Rhythm rhythm = Rhythm::Regular;
  double snr_db = 20.0;
  std::uint64_t seed = 0;
  double jitter = 0.02;  // Regular/Noisy: relative R-R jitter bound

  void validate() const;
};

struct SynthEcg {
  Record record;
  std::vector<std::size_t> peaks;  // exact R apex indices
};

// Piecewise-Gaussian ECG: each beat is an R spike with Q and S deflections
// plus smooth P and T bumps. White noise is added at `snr_db` relative to the
// clean beat waveform. Noisy rhythms also carry 0.3 Hz baseline wander.
// Irregular rhythms have no P waves and a fibrillatory baseline near f_hz.
SynthEcg synth_ecg(const SynthSpec& spec, std::string id = "synth");

// Relative amplitudes of the waveform components (R apex = 1).
struct BeatShape {
  static constexpr double r_amp = 1.0;
  static constexpr double q_amp = -0.12;
  static constexpr double s_amp = -0.25;
  static constexpr double p_amp = 0.15;
  static constexpr double t_amp = 0.30;
  // Irregular rhythm: P waves absent, replaced by fibrillatory waves.
  static constexpr double f_amp = 0.15;
  static constexpr double f_hz = 6.0;
};

// A balanced labelled corpus: record i has rhythm i mod 3, a heart rate drawn
// uniformly from [hr_min, hr_max] and its own derived seed. Noisy records use
// noisy_snr_db, the others snr_db.
struct CorpusSpec {
  std::size_t count = 30;
  double fs = 300.0;
  double duration = 30.0;
  double hr_min = 90.0;
  double hr_max = 140.0;
  double snr_db = 20.0;
  double noisy_snr_db = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<SynthEcg> synth_corpus(const CorpusSpec& spec);
Dataset corpus_dataset(const std::vector<SynthEcg>& corpus);

}  // namespace ecgnet

