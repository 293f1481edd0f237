#include <doctest.h>

#include <fstream>
#include <random>

#include "ecgnet/segmenter.hpp"
#include "ecgnet/synth.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace ecgnet;

namespace {

Record ramp_record(std::size_t n, ClassLabel label = ClassLabel::AFib) {
  Record r{"rec", std::vector<double>(n), 300.0, label};
  for (std::size_t i = 0; i < n; ++i) r.samples[i] = static_cast<double>(i);
  return r;
}

BeatAnnotations annotate(std::vector<std::size_t> peaks) { return {std::move(peaks), {}}; }

Dataset synth_dataset(std::size_t n, std::uint64_t seed) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    SynthSpec spec;
    spec.duration = 12.0;
    spec.mean_hr = 90.0 + 10.0 * static_cast<double>(i % 4);
    spec.rhythm = static_cast<Rhythm>(i % 3);
    spec.snr_db = spec.rhythm == Rhythm::Noisy ? 8.0 : 20.0;
    spec.seed = seed + i;
    ds.add(synth_ecg(spec, "s" + std::to_string(i)).record);
  }
  return ds;
}

}  // namespace

TEST_CASE("segment_record examples") {
  const SegmentConfig cfg;

  CHECK(segment_record(ramp_record(3000), annotate({100, 300, 500, 700}), cfg).empty());

  std::vector<SegmentWindow> windows;
  const auto segs = segment_record(ramp_record(1200), annotate({100, 300, 500, 700, 850}), cfg, &windows);
  REQUIRE(segs.size() == 1);
  REQUIRE(windows.size() == 1);
  CHECK(windows[0].start == 0);
  CHECK(segs[0].peak_offsets() == std::vector<std::size_t>{100, 300, 500, 700, 850});
  CHECK(segs[0].samples().size() == 1000);
  CHECK(segs[0].samples()[999] == 999.0f);
  CHECK(segs[0].label() == ClassLabel::AFib);
  CHECK(segs[0].record_id() == "rec");

  CHECK(segment_record(ramp_record(999), annotate({100, 200, 300, 400, 500}), cfg).empty());

  Record unlabeled = ramp_record(1200);
  unlabeled.label.reset();
  CHECK_THROWS_AS(segment_record(unlabeled, annotate({100, 300, 500, 700, 850}), cfg), Error);
}

TEST_CASE("clamping at the end of a record") {
  std::vector<SegmentWindow> windows;
  const auto segs =
      segment_record(ramp_record(2000), annotate({1300, 1450, 1600, 1750, 1900}), SegmentConfig{}, &windows);
  REQUIRE(segs.size() == 1);
  CHECK(windows[0].start == 1000);
  CHECK(segs[0].peak_offsets() == std::vector<std::size_t>{300, 450, 600, 750, 900});
}

TEST_CASE("slow rhythms leave no room for five beats") {
  // At 60 bpm five beats span 1200 samples, more than the 900 available after
  // the lead-in, so every group is skipped.
  SynthSpec spec;
  spec.mean_hr = 60.0;
  spec.jitter = 0.0;
  const auto ecg = synth_ecg(spec);
  REQUIRE(ecg.record.samples.size() == 9000);
  REQUIRE(ecg.peaks.size() == 30);
  const auto segs = segment_record(ecg.record, annotate(ecg.peaks), SegmentConfig{});
  CHECK(segs.empty());
  CHECK(oracle::segment_windows(ecg.peaks, 9000, 1000, 5, 100).empty());

  spec.mean_hr = 100.0;
  const auto fast = synth_ecg(spec);
  std::vector<SegmentWindow> windows;
  const auto fast_segs = segment_record(fast.record, annotate(fast.peaks), SegmentConfig{}, &windows);
  const auto expected = oracle::segment_windows(fast.peaks, 9000, 1000, 5, 100);
  CHECK(fast_segs.size() == 12);
  REQUIRE(fast_segs.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(windows[i].start == expected[i].start);
    CHECK(fast_segs[i].peak_offsets() == expected[i].offsets);
  }
}

TEST_CASE("segment_record agrees with enumeration on random peak sets") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    SegmentConfig cfg;
    cfg.seg_len = 200 + trial % 7 * 50;
    cfg.min_beats = 2 + trial % 5;
    cfg.lead_in = trial % 3 * 30;
    const std::size_t len = std::uniform_int_distribution<std::size_t>(cfg.seg_len - 50, 4000)(rng);
    std::vector<std::size_t> peaks;
    std::size_t p = std::uniform_int_distribution<std::size_t>(0, 80)(rng);
    while (p < len) {
      peaks.push_back(p);
      p += std::uniform_int_distribution<std::size_t>(1, 200)(rng);
    }
    const auto rec = ramp_record(len);
    std::vector<SegmentWindow> windows;
    const auto segs = segment_record(rec, annotate(peaks), cfg, &windows);
    const auto expected = oracle::segment_windows(peaks, len, cfg.seg_len, cfg.min_beats, cfg.lead_in);
    REQUIRE(segs.size() == expected.size());
    for (std::size_t i = 0; i < segs.size(); ++i) {
      CHECK(windows[i].start == expected[i].start);
      CHECK(windows[i].end <= len);
      CHECK(segs[i].peak_offsets() == expected[i].offsets);
      CHECK(segs[i].samples().size() == cfg.seg_len);
      CHECK(segs[i].peak_offsets().size() >= cfg.min_beats);
      CHECK(segs[i].samples().front() == static_cast<float>(windows[i].start));
    }
  }
}

TEST_CASE("segment invariants are enforced on construction") {
  const std::vector<float> samples(10, 0.0f);
  CHECK_NOTHROW(Segment("a", samples, {1, 2, 3}, ClassLabel::Normal, 10, 3));
  CHECK_THROWS_AS(Segment("a", samples, {1, 2, 3}, ClassLabel::Normal, 11, 3), InvariantError);
  CHECK_THROWS_AS(Segment("a", samples, {1, 2}, ClassLabel::Normal, 10, 3), InvariantError);
  CHECK_THROWS_AS(Segment("a", samples, {1, 3, 2}, ClassLabel::Normal, 10, 3), InvariantError);
  CHECK_THROWS_AS(Segment("a", samples, {1, 2, 10}, ClassLabel::Normal, 10, 3), InvariantError);

  SegmentConfig cfg;
  cfg.lead_in = 1000;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.min_beats = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("segment_dataset") {
  PipelineConfig cfg;
  const auto empty = segment_dataset(Dataset{}, cfg);
  CHECK(empty.segments.empty());
  CHECK(empty.per_record_index.empty());

  const auto ds = synth_dataset(9, 40);
  const auto out = segment_dataset(ds, cfg);
  REQUIRE_FALSE(out.segments.empty());
  CHECK(out.per_record_index.size() == ds.size());
  std::size_t covered = 0;
  for (const auto& r : ds.records()) {
    const auto range = out.per_record_index.at(r.id);
    for (std::size_t i = range.begin; i < range.end; ++i) {
      CHECK(out.segments[i].record_id() == r.id);
      CHECK(out.segments[i].label() == *r.label);
    }
    covered += range.end - range.begin;
  }
  CHECK(covered == out.segments.size());
  for (const auto& s : out.segments) CHECK(s.samples().size() == 1000);

  std::size_t counted = 0;
  for (const auto& [label, n] : out.class_counts()) counted += n;
  CHECK(counted == out.segments.size());
  CHECK(out.class_counts().size() == 3);

  CHECK(segment_dataset(ds, cfg).segments == out.segments);
  cfg.jobs = 4;
  const auto parallel = segment_dataset(ds, cfg);
  CHECK(parallel.segments == out.segments);
  CHECK(parallel.per_record_index == out.per_record_index);
  CHECK(index_segments(out.segments) == out.per_record_index);
}

TEST_CASE("records shorter than a segment are skipped") {
  Dataset ds;
  ds.add(Record{"short", std::vector<double>(900, 1.0), 300.0, ClassLabel::Normal});
  const auto out = segment_dataset(ds, PipelineConfig{});
  CHECK(out.segments.empty());
  CHECK(out.per_record_index.at("short") == SegmentRange{0, 0});
}

TEST_CASE("segment packs") {
  testing::TempDir dir;
  const auto segs = segment_dataset(synth_dataset(6, 3), PipelineConfig{}).segments;
  REQUIRE_FALSE(segs.empty());
  write_segment_pack(dir / "segs.bin", segs, 1000);
  CHECK(read_segment_pack(dir / "segs.bin") == segs);

  write_segment_pack(dir / "none.bin", {}, 1000);
  CHECK(read_segment_pack(dir / "none.bin").empty());

  {
    std::ofstream out(dir / "bad.bin", std::ios::binary);
    out << "abc";
  }
  CHECK_THROWS_AS(read_segment_pack(dir / "bad.bin"), Error);
  CHECK_THROWS_AS(read_segment_pack(dir / "missing.bin"), Error);

  const auto full = std::filesystem::file_size(dir / "segs.bin");
  std::filesystem::resize_file(dir / "segs.bin", full - 3);
  CHECK_THROWS_AS(read_segment_pack(dir / "segs.bin"), Error);
}

TEST_CASE("index_segments rejects interleaved records") {
  const std::vector<float> samples(10, 0.0f);
  std::vector<Segment> segs{Segment("a", samples, {1, 2}, ClassLabel::Normal, 10, 2),
                            Segment("b", samples, {1, 2}, ClassLabel::Normal, 10, 2),
                            Segment("a", samples, {1, 2}, ClassLabel::Normal, 10, 2)};
  CHECK_THROWS_AS(index_segments(segs), Error);
  segs.pop_back();
  const auto idx = index_segments(segs);
  CHECK(idx.at("a") == SegmentRange{0, 1});
  CHECK(idx.at("b") == SegmentRange{1, 2});
}
