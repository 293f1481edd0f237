#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecgnet/error.hpp"

namespace ecgnet {

enum class ClassLabel : std::uint8_t { Normal = 0, AFib = 1, Other = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<ClassLabel, kNumClasses> kAllLabels = {
    ClassLabel::Normal, ClassLabel::AFib, ClassLabel::Other};

// Single-character code used in REFERENCE files: N, A, O.
char label_code(ClassLabel label);
ClassLabel label_from_index(std::size_t index);
inline std::size_t label_index(ClassLabel label) { return static_cast<std::size_t>(label); }

// One single-channel ECG recording. Samples are in millivolts.
struct Record {
  std::string id;
  std::vector<double> samples;
  double fs = 300.0;
  std::optional<ClassLabel> label;
};

// Records with unique ids plus per-class counts kept in sync on insertion.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Record> records);

  void add(Record record);

  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::map<ClassLabel, std::size_t>& class_counts() const { return class_counts_; }
  bool contains(const std::string& id) const;

 private:
  std::vector<Record> records_;
  std::map<ClassLabel, std::size_t> class_counts_;
  std::map<std::string, std::size_t> index_;
};

// What to do with `~` (noisy) lines in a REFERENCE file.
enum class NoisyPolicy { Drop, FoldIntoOther };

struct ReferenceEntry {
  std::string id;
  ClassLabel label;
  bool operator==(const ReferenceEntry&) const = default;
};

// Parses `record_id,{N|A|O|~}` lines. Blank lines are ignored but still
// counted when reporting line numbers in errors.
std::vector<ReferenceEntry> parse_reference(std::string_view text,
                                            NoisyPolicy noisy = NoisyPolicy::Drop);
std::vector<ReferenceEntry> load_reference(const std::filesystem::path& path,
                                           NoisyPolicy noisy = NoisyPolicy::Drop);
void save_reference(const std::filesystem::path& path, std::span<const ReferenceEntry> entries);

// Loads `<id>.csv` (one decimal per line) or `<id>.f32` (raw little-endian
// float32). The format is chosen by extension.
Record load_record(const std::filesystem::path& path, double fs, std::string id);

void save_record_f32(const std::filesystem::path& path, std::span<const double> samples);
void save_record_csv(const std::filesystem::path& path, std::span<const double> samples);

// Finds `<dir>/<id>.f32` or `<dir>/<id>.csv`, preferring the binary file.
std::optional<std::filesystem::path> find_record_file(const std::filesystem::path& dir,
                                                      const std::string& id);

// Loads every record listed in the reference file from `dir`.
Dataset load_dataset(const std::filesystem::path& dir, const std::filesystem::path& reference,
                     double fs, NoisyPolicy noisy = NoisyPolicy::Drop);

// Stratified seeded split. Per-class train counts are apportioned by largest
// remainder so the total is round(train_fraction * |ds|) and every class is
// within one of round(train_fraction * class_count).
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction,
                                          std::uint64_t seed);

}  // namespace ecgnet
