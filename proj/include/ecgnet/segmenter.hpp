#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ecgnet/preprocess.hpp"
#include "ecgnet/qrs_detect.hpp"
#include "ecgnet/record_io.hpp"

namespace ecgnet {

struct SegmentConfig {
  std::size_t seg_len = 1000;
  std::size_t min_beats = 5;  // 4 R-R intervals
  std::size_t lead_in = 100;

  void validate() const;
};

// Fixed-length window cut from one record. The constructor checks every
// invariant and throws InvariantError on violation.
class Segment {
 public:
  Segment(std::string record_id, std::vector<float> samples, std::vector<std::size_t> peak_offsets,
          ClassLabel label, std::size_t seg_len, std::size_t min_beats);

  const std::string& record_id() const { return record_id_; }
  const std::vector<float>& samples() const { return samples_; }
  const std::vector<std::size_t>& peak_offsets() const { return peak_offsets_; }
  ClassLabel label() const { return label_; }

  bool operator==(const Segment&) const = default;

 private:
  std::string record_id_;
  std::vector<float> samples_;
  std::vector<std::size_t> peak_offsets_;
  ClassLabel label_;
};

// Where a segment was cut from, for bounds auditing.
struct SegmentWindow {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
};

// Groups of min_beats consecutive peaks with a stride of min_beats - 1 peaks.
// A group spanning fewer than seg_len - lead_in samples yields the window
// starting at clamp(first_peak - lead_in, 0, len - seg_len).
std::vector<Segment> segment_record(const Record& rec, const BeatAnnotations& ann,
                                    const SegmentConfig& cfg,
                                    std::vector<SegmentWindow>* windows = nullptr);

struct SegmentRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  bool operator==(const SegmentRange&) const = default;
};

struct SegmentedDataset {
  std::vector<Segment> segments;
  std::map<std::string, SegmentRange> per_record_index;

  std::map<ClassLabel, std::size_t> class_counts() const;
};

struct PipelineConfig {
  FilterSpec filter;
  DualSlopeParams detector;
  SegmentConfig segments;
  std::size_t max_len = kDefaultMaxLength;
  bool already_preprocessed = false;
  std::size_t jobs = 1;
};

// Per record: preprocess, detect, segment. Records are independent so `jobs`
// workers may run in parallel; output order always follows the dataset.
SegmentedDataset segment_dataset(const Dataset& ds, const PipelineConfig& cfg);

// Rebuilds the per-record index from contiguous runs of record ids.
std::map<std::string, SegmentRange> index_segments(const std::vector<Segment>& segments);

// Binary pack: u32 seg_len, u32 count, then per segment u32 id length, id
// bytes, u8 label, seg_len f32 samples, u32 peak count, u32 offsets.
void write_segment_pack(const std::filesystem::path& path, const std::vector<Segment>& segments,
                        std::size_t seg_len);
std::vector<Segment> read_segment_pack(const std::filesystem::path& path);

}  // namespace ecgnet
