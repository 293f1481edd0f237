#include "ecgnet/segmenter.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <span>
#include <thread>

#include "ecgnet/binary_io.hpp"
#include "ecgnet/error.hpp"

namespace ecgnet {

void SegmentConfig::validate() const {
  require(seg_len > 0, "segment length must be positive");
  require(min_beats >= 2, "segments need at least two beats");
  require(lead_in < seg_len, "lead-in must be shorter than the segment");
}

Segment::Segment(std::string record_id, std::vector<float> samples, std::vector<std::size_t> peak_offsets,
                 ClassLabel label, std::size_t seg_len, std::size_t min_beats)
    : record_id_(std::move(record_id)),
      samples_(std::move(samples)),
      peak_offsets_(std::move(peak_offsets)),
      label_(label) {
  ensure(samples_.size() == seg_len, "segment of '" + record_id_ + "' has " + std::to_string(samples_.size()) +
                                         " samples, expected " + std::to_string(seg_len));
  ensure(peak_offsets_.size() >= min_beats, "segment of '" + record_id_ + "' holds too few peaks");
  for (std::size_t i = 0; i < peak_offsets_.size(); ++i) {
    ensure(peak_offsets_[i] < seg_len, "segment peak offset out of range");
    ensure(i == 0 || peak_offsets_[i] > peak_offsets_[i - 1], "segment peak offsets not increasing");
  }
}

std::vector<Segment> segment_record(const Record& rec, const BeatAnnotations& ann, const SegmentConfig& cfg,
                                    std::vector<SegmentWindow>* windows) {
  cfg.validate();
  require(rec.label.has_value(), "record '" + rec.id + "' has no label");
  std::vector<Segment> out;
  const auto& peaks = ann.peaks;
  const std::size_t len = rec.samples.size();
  if (len < cfg.seg_len || peaks.size() < cfg.min_beats) return out;

  const std::span<const double> signal(rec.samples);
  const std::size_t stride = cfg.min_beats - 1;
  const std::size_t capacity = cfg.seg_len - cfg.lead_in;
  for (std::size_t g = 0; g + cfg.min_beats <= peaks.size(); g += stride) {
    const std::size_t first = peaks[g];
    const std::size_t last = peaks[g + cfg.min_beats - 1];
    ensure(last > first && last < len, "peaks must be increasing and inside the record");
    if (last - first >= capacity) continue;

    const std::size_t start = std::min(first > cfg.lead_in ? first - cfg.lead_in : 0, len - cfg.seg_len);
    const auto window = signal.subspan(start, cfg.seg_len);
    std::vector<float> samples(window.begin(), window.end());
    std::vector<std::size_t> offsets;
    for (const auto pk : peaks) {
      if (pk >= start && pk < start + cfg.seg_len) offsets.push_back(pk - start);
    }
    out.emplace_back(rec.id, std::move(samples), std::move(offsets), *rec.label, cfg.seg_len, cfg.min_beats);
    if (windows) windows->push_back({start, start + cfg.seg_len});
  }
  return out;
}

std::map<ClassLabel, std::size_t> SegmentedDataset::class_counts() const {
  std::map<ClassLabel, std::size_t> counts;
  for (const auto& s : segments) ++counts[s.label()];
  return counts;
}

SegmentedDataset segment_dataset(const Dataset& ds, const PipelineConfig& cfg) {
  cfg.segments.validate();
  cfg.detector.validate();
  const auto filter = cfg.already_preprocessed ? FirFilter{} : design_bandpass(cfg.filter);
  const auto& records = ds.records();
  for (const auto& r : records) require(r.label.has_value(), "record '" + r.id + "' has no label");

  std::vector<std::vector<Segment>> per_record(records.size());
  auto work = [&](std::size_t i) {
    const auto& rec = records[i];
    if (rec.samples.size() < cfg.segments.seg_len) return;
    const Record processed = cfg.already_preprocessed ? rec : preprocess_record(rec, filter, cfg.max_len);
    if (processed.samples.size() <= 2 * cfg.detector.k_max) return;
    const auto ann = detect_r_peaks(processed.samples, processed.fs, cfg.detector);
    per_record[i] = segment_record(processed, ann, cfg.segments);
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, records.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  SegmentedDataset out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t begin = out.segments.size();
    for (auto& s : per_record[i]) out.segments.push_back(std::move(s));
    out.per_record_index[records[i].id] = {begin, out.segments.size()};
  }
  return out;
}

std::map<std::string, SegmentRange> index_segments(const std::vector<Segment>& segments) {
  std::map<std::string, SegmentRange> index;
  std::size_t i = 0;
  while (i < segments.size()) {
    std::size_t j = i;
    while (j < segments.size() && segments[j].record_id() == segments[i].record_id()) ++j;
    const auto [it, inserted] = index.emplace(segments[i].record_id(), SegmentRange{i, j});
    require(inserted, "segments of record '" + segments[i].record_id() + "' are not contiguous");
    i = j;
  }
  return index;
}

void write_segment_pack(const std::filesystem::path& path, const std::vector<Segment>& segments,
                        std::size_t seg_len) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  binary::write_uint(out, static_cast<std::uint32_t>(seg_len));
  binary::write_uint(out, static_cast<std::uint32_t>(segments.size()));
  for (const auto& s : segments) {
    ensure(s.samples().size() == seg_len, "segment length mismatch while writing pack");
    binary::write_string(out, s.record_id());
    binary::write_uint(out, static_cast<std::uint8_t>(s.label()));
    for (const float v : s.samples()) binary::write_f32(out, v);
    binary::write_uint(out, static_cast<std::uint32_t>(s.peak_offsets().size()));
    for (const auto o : s.peak_offsets()) binary::write_uint(out, static_cast<std::uint32_t>(o));
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::vector<Segment> read_segment_pack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open segment pack '" + path.string() + "'");
  const auto seg_len = binary::read_uint<std::uint32_t>(in);
  const auto count = binary::read_uint<std::uint32_t>(in);
  require(seg_len > 0, "segment pack has zero segment length");
  std::vector<Segment> segments;
  segments.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    auto id = binary::read_string(in);
    const auto label = binary::read_uint<std::uint8_t>(in);
    require(label < kNumClasses, "segment pack has an invalid label byte");
    std::vector<float> samples(seg_len);
    for (auto& v : samples) v = binary::read_f32(in);
    const auto peaks = binary::read_uint<std::uint32_t>(in);
    require(peaks <= seg_len, "segment pack peak count exceeds segment length");
    std::vector<std::size_t> offsets(peaks);
    for (auto& o : offsets) o = binary::read_uint<std::uint32_t>(in);
    try {
      segments.emplace_back(std::move(id), std::move(samples), std::move(offsets), label_from_index(label),
                            seg_len, 1);
    } catch (const InvariantError& e) {
      throw Error("corrupt segment pack '" + path.string() + "': " + e.what());
    }
  }
  return segments;
}

}  // namespace ecgnet
