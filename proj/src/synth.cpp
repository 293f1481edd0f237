#include "ecgnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ecgnet/error.hpp"

namespace ecgnet {

ClassLabel rhythm_label(Rhythm rhythm) {
  switch (rhythm) {
    case Rhythm::Regular: return ClassLabel::Normal;
    case Rhythm::Irregular: return ClassLabel::AFib;
    case Rhythm::Noisy: return ClassLabel::Other;
  }
  throw InvariantError("unknown rhythm");
}

void SynthSpec::validate() const {
  require(fs > 0.0, "synth sample rate must be positive");
  require(duration >= 0.0, "synth duration must be non-negative");
  require(mean_hr >= 30.0 && mean_hr <= 220.0, "synth mean heart rate must be in [30, 220] bpm");
  require(jitter >= 0.0 && jitter < 1.0, "synth jitter must be in [0, 1)");
  require(std::isfinite(snr_db), "synth SNR must be finite");
}

namespace {

void add_gaussian(std::vector<double>& x, double fs, double centre_s, double sigma_s, double amp) {
  const double c = centre_s * fs;
  const double sigma = sigma_s * fs;
  const auto lo = static_cast<std::ptrdiff_t>(std::floor(c - 5.0 * sigma));
  const auto hi = static_cast<std::ptrdiff_t>(std::ceil(c + 5.0 * sigma));
  for (auto i = std::max<std::ptrdiff_t>(lo, 0); i <= hi && i < static_cast<std::ptrdiff_t>(x.size()); ++i) {
    const double d = (static_cast<double>(i) - c) / sigma;
    x[static_cast<std::size_t>(i)] += amp * std::exp(-0.5 * d * d);
  }
}

}  // namespace

SynthEcg synth_ecg(const SynthSpec& spec, std::string id) {
  spec.validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.fs));
  SynthEcg out;
  out.record = Record{std::move(id), std::vector<double>(n, 0.0), spec.fs, rhythm_label(spec.rhythm)};
  if (n == 0) return out;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double nominal = 60.0 / spec.mean_hr;
  const double margin = std::max(0.25 * nominal, 0.15);

  auto next_interval = [&] {
    if (spec.rhythm == Rhythm::Irregular) return nominal * (0.6 + 0.8 * unit(rng));
    return nominal * (1.0 + spec.jitter * (2.0 * unit(rng) - 1.0));
  };

  // Beat times on the sample grid so the R apex index is exact.
  std::vector<double> times;
  for (double t = 0.5 * nominal; t + margin < spec.duration; t += next_interval()) {
    const auto idx = static_cast<std::size_t>(std::llround(t * spec.fs));
    if (idx >= n) break;
    out.peaks.push_back(idx);
    times.push_back(static_cast<double>(idx) / spec.fs);
  }

  auto& x = out.record.samples;
  for (std::size_t b = 0; b < times.size(); ++b) {
    const double t = times[b];
    const double rr_prev = b > 0 ? t - times[b - 1] : nominal;
    const double rr_next = b + 1 < times.size() ? times[b + 1] - t : nominal;
    add_gaussian(x, spec.fs, t, 0.010, BeatShape::r_amp);
    add_gaussian(x, spec.fs, t - 0.025, 0.008, BeatShape::q_amp);
    add_gaussian(x, spec.fs, t + 0.025, 0.010, BeatShape::s_amp);
    if (spec.rhythm != Rhythm::Irregular)
      add_gaussian(x, spec.fs, t - std::min(0.16, 0.30 * rr_prev), 0.025, BeatShape::p_amp);
    add_gaussian(x, spec.fs, t + std::min(0.28, 0.45 * rr_next), 0.040, BeatShape::t_amp);
  }

  double power = 0.0;
  for (const double v : x) power += v * v;
  power /= static_cast<double>(n);
  const double noise_sd = std::sqrt(power / std::pow(10.0, spec.snr_db / 10.0));

  std::normal_distribution<double> noise(0.0, 1.0);
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  const double f_hz = BeatShape::f_hz * (0.8 + 0.4 * unit(rng));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.fs;
    x[i] += noise_sd * noise(rng);
    if (spec.rhythm == Rhythm::Noisy) x[i] += 1.0 * std::sin(2.0 * std::numbers::pi * 0.3 * t + phase);
    if (spec.rhythm == Rhythm::Irregular)
      x[i] += BeatShape::f_amp * std::sin(2.0 * std::numbers::pi * f_hz * t + phase);
  }
  return out;
}

void CorpusSpec::validate() const {
  require(hr_min <= hr_max, "corpus heart-rate range is empty");
  SynthSpec probe;
  probe.fs = fs;
  probe.duration = duration;
  for (const double hr : {hr_min, hr_max}) {
    probe.mean_hr = hr;
    probe.validate();
  }
  require(std::isfinite(snr_db) && std::isfinite(noisy_snr_db), "corpus SNR must be finite");
}

std::vector<SynthEcg> synth_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> hr(spec.hr_min, spec.hr_max);
  std::vector<SynthEcg> out;
  out.reserve(spec.count);
  const int width = std::max<int>(5, static_cast<int>(std::to_string(spec.count).size()));
  for (std::size_t i = 0; i < spec.count; ++i) {
    SynthSpec s;
    s.fs = spec.fs;
    s.duration = spec.duration;
    s.rhythm = static_cast<Rhythm>(i % 3);
    s.mean_hr = hr(rng);
    s.snr_db = s.rhythm == Rhythm::Noisy ? spec.noisy_snr_db : spec.snr_db;
    s.seed = rng();
    std::string id = std::to_string(i + 1);
    id = "S" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    out.push_back(synth_ecg(s, std::move(id)));
  }
  return out;
}

Dataset corpus_dataset(const std::vector<SynthEcg>& corpus) {
  Dataset ds;
  for (const auto& e : corpus) ds.add(e.record);
  return ds;
}

}  // namespace ecgnet

