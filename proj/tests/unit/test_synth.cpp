#include <doctest.h>

#include <cmath>

#include "ecgnet/preprocess.hpp"
#include "ecgnet/synth.hpp"

using namespace ecgnet;

TEST_CASE("synth examples") {
  SynthSpec spec;
  spec.duration = 0.0;
  const auto empty = synth_ecg(spec);
  CHECK(empty.record.samples.empty());
  CHECK(empty.peaks.empty());

  spec.duration = 10.0;
  spec.mean_hr = 60.0;
  spec.jitter = 0.0;
  const auto reg = synth_ecg(spec);
  REQUIRE(reg.peaks.size() == 10);
  CHECK(reg.record.samples.size() == 3000);
  for (std::size_t i = 1; i < reg.peaks.size(); ++i) CHECK(reg.peaks[i] - reg.peaks[i - 1] == 300);

  spec.seed = 99;
  spec.rhythm = Rhythm::Irregular;
  const auto a = synth_ecg(spec, "x"), b = synth_ecg(spec, "x");
  CHECK(a.record.samples == b.record.samples);
  CHECK(a.peaks == b.peaks);
  spec.seed = 100;
  CHECK(synth_ecg(spec, "x").record.samples != a.record.samples);
}

TEST_CASE("labels follow the rhythm") {
  CHECK(rhythm_label(Rhythm::Regular) == ClassLabel::Normal);
  CHECK(rhythm_label(Rhythm::Irregular) == ClassLabel::AFib);
  CHECK(rhythm_label(Rhythm::Noisy) == ClassLabel::Other);
  SynthSpec spec;
  spec.rhythm = Rhythm::Noisy;
  spec.duration = 2.0;
  CHECK(synth_ecg(spec).record.label == ClassLabel::Other);
}

TEST_CASE("invalid specs") {
  SynthSpec spec;
  spec.duration = -1.0;
  CHECK_THROWS_AS(synth_ecg(spec), Error);
  spec = {};
  spec.mean_hr = 20.0;
  CHECK_THROWS_AS(synth_ecg(spec), Error);
  spec.mean_hr = 221.0;
  CHECK_THROWS_AS(synth_ecg(spec), Error);
  spec = {};
  spec.fs = 0.0;
  CHECK_THROWS_AS(synth_ecg(spec), Error);
}

TEST_CASE("beat intervals respect the rhythm law") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.mean_hr = 30.0 + 6.0 * static_cast<double>(seed);
    const double nominal = 60.0 / spec.mean_hr * spec.fs;
    for (const auto rhythm : {Rhythm::Regular, Rhythm::Irregular, Rhythm::Noisy}) {
      spec.rhythm = rhythm;
      const auto ecg = synth_ecg(spec);
      REQUIRE(ecg.peaks.size() >= 10);
      for (std::size_t i = 1; i < ecg.peaks.size(); ++i) {
        const double gap = static_cast<double>(ecg.peaks[i] - ecg.peaks[i - 1]);
        // One sample of slack for rounding beat times onto the sample grid.
        if (rhythm == Rhythm::Irregular) {
          CHECK(gap >= 0.6 * nominal - 1.0);
          CHECK(gap <= 1.4 * nominal + 1.0);
        } else {
          CHECK(std::abs(gap - nominal) <= 0.02 * nominal + 1.0);
        }
      }
      CHECK(ecg.peaks.back() < ecg.record.samples.size());
    }
  }
}

TEST_CASE("R apex dominates P and T bumps") {
  CHECK(BeatShape::r_amp >= 3.0 * BeatShape::t_amp);
  CHECK(BeatShape::r_amp >= 3.0 * BeatShape::p_amp);

  // Noise-free check on the clean waveform: the R apex is at least 3x any
  // sample more than 60 ms from every apex.
  SynthSpec spec;
  spec.snr_db = 300.0;
  spec.mean_hr = 70.0;
  const auto ecg = synth_ecg(spec);
  double away = 0.0;
  for (std::size_t i = 0; i < ecg.record.samples.size(); ++i) {
    bool near = false;
    for (const auto p : ecg.peaks) near = near || (i + 18 >= p && i <= p + 18);
    if (!near) away = std::max(away, std::abs(ecg.record.samples[i]));
  }
  for (const auto p : ecg.peaks) CHECK(ecg.record.samples[p] >= 3.0 * away);
}

TEST_CASE("signal to noise ratio") {
  SynthSpec spec;
  spec.snr_db = 300.0;
  spec.seed = 5;
  const auto clean = synth_ecg(spec);
  spec.snr_db = 15.0;
  const auto noisy = synth_ecg(spec);
  REQUIRE(clean.peaks == noisy.peaks);
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.record.samples.size(); ++i) {
    const double n = noisy.record.samples[i] - clean.record.samples[i];
    ps += clean.record.samples[i] * clean.record.samples[i];
    pn += n * n;
  }
  CHECK(10.0 * std::log10(ps / pn) == doctest::Approx(15.0).epsilon(0.02));
}

TEST_CASE("generated records survive preprocessing") {
  for (const auto rhythm : {Rhythm::Regular, Rhythm::Irregular, Rhythm::Noisy}) {
    SynthSpec spec;
    spec.rhythm = rhythm;
    spec.seed = 3;
    const auto rec = preprocess_record(synth_ecg(spec).record, FilterSpec{});
    double energy = 0.0;
    for (const double v : rec.samples) {
      CHECK(std::isfinite(v));
      energy += v * v;
    }
    CHECK(energy / static_cast<double>(rec.samples.size()) > (rhythm == Rhythm::Noisy ? 0.01 : 0.1));
  }
}
