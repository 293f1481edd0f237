#include "ecgnet/record_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "ecgnet/binary_io.hpp"
#include "ecgnet/error.hpp"

namespace ecgnet {

namespace fs = std::filesystem;

char label_code(ClassLabel label) {
  switch (label) {
    case ClassLabel::Normal: return 'N';
    case ClassLabel::AFib: return 'A';
    case ClassLabel::Other: return 'O';
  }
  throw InvariantError("unknown class label");
}

ClassLabel label_from_index(std::size_t index) {
  require(index < kNumClasses, "class index " + std::to_string(index) + " out of range");
  return static_cast<ClassLabel>(index);
}

Dataset::Dataset(std::vector<Record> records) {
  for (auto& r : records) add(std::move(r));
}

void Dataset::add(Record record) {
  require(!record.id.empty(), "record id must not be empty");
  require(!contains(record.id), "duplicate record id '" + record.id + "'");
  require(record.fs > 0.0, "record '" + record.id + "' has non-positive sample rate");
  if (record.label) ++class_counts_[*record.label];
  index_.emplace(record.id, records_.size());
  records_.push_back(std::move(record));
}

bool Dataset::contains(const std::string& id) const { return index_.count(id) != 0; }

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    fn(line_no, text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

}  // namespace

std::vector<ReferenceEntry> parse_reference(std::string_view text, NoisyPolicy noisy) {
  std::vector<ReferenceEntry> entries;
  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const auto line = trim(raw);
    if (line.empty()) return;
    const auto comma = line.find(',');
    const auto where = "reference line " + std::to_string(line_no);
    if (comma == std::string_view::npos) throw Error(where + ": expected 'id,label'");
    const auto id = trim(line.substr(0, comma));
    const auto code = trim(line.substr(comma + 1));
    if (id.empty()) throw Error(where + ": empty record id");
    if (code.size() != 1) throw Error(where + ": bad label '" + std::string(code) + "'");
    switch (code[0]) {
      case 'N': entries.push_back({std::string(id), ClassLabel::Normal}); break;
      case 'A': entries.push_back({std::string(id), ClassLabel::AFib}); break;
      case 'O': entries.push_back({std::string(id), ClassLabel::Other}); break;
      case '~':
        if (noisy == NoisyPolicy::FoldIntoOther) entries.push_back({std::string(id), ClassLabel::Other});
        break;
      default: throw Error(where + ": bad label '" + std::string(code) + "'");
    }
  });
  return entries;
}

std::vector<ReferenceEntry> load_reference(const fs::path& path, NoisyPolicy noisy) {
  if (!fs::exists(path)) throw Error("reference file not found: '" + path.string() + "'");
  try {
    return parse_reference(read_text(path), noisy);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_reference(const fs::path& path, std::span<const ReferenceEntry> entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& e : entries) out << e.id << ',' << label_code(e.label) << '\n';
}

Record load_record(const fs::path& path, double fs, std::string id) {
  require(fs > 0.0, "sample rate must be positive");
  Record rec{std::move(id), {}, fs, std::nullopt};
  const auto ext = path.extension().string();
  const auto where = "'" + path.string() + "'";
  if (ext == ".f32") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + where);
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    if (bytes % 4 != 0) throw Error(where + ": size is not a multiple of 4 bytes");
    rec.samples.reserve(bytes / 4);
    for (std::size_t i = 0; i < bytes / 4; ++i) {
      const float v = binary::read_f32(in);
      if (!std::isfinite(v)) throw Error(where + ": non-finite sample at index " + std::to_string(i));
      rec.samples.push_back(v);
    }
  } else if (ext == ".csv") {
    const auto text = read_text(path);
    for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
      const auto line = trim(raw);
      if (line.empty()) return;
      double v = 0.0;
      const auto* end = line.data() + line.size();
      const auto [ptr, ec] = std::from_chars(line.data(), end, v);
      if (ec != std::errc() || ptr != end) {
        throw Error(where + " line " + std::to_string(line_no) + ": not a number");
      }
      if (!std::isfinite(v)) throw Error(where + " line " + std::to_string(line_no) + ": non-finite sample");
      rec.samples.push_back(v);
    });
  } else {
    throw Error(where + ": unsupported record extension (expected .csv or .f32)");
  }
  if (rec.samples.empty()) throw Error(where + ": empty record");
  return rec;
}

void save_record_f32(const fs::path& path, std::span<const double> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const double v : samples) binary::write_f32(out, static_cast<float>(v));
}

void save_record_csv(const fs::path& path, std::span<const double> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.precision(17);
  for (const double v : samples) out << v << '\n';
}

std::optional<fs::path> find_record_file(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".f32", ".csv"}) {
    auto p = dir / (id + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

Dataset load_dataset(const fs::path& dir, const fs::path& reference, double fs, NoisyPolicy noisy) {
  Dataset ds;
  for (const auto& entry : load_reference(reference, noisy)) {
    const auto file = find_record_file(dir, entry.id);
    if (!file) throw Error("no record file for '" + entry.id + "' in '" + dir.string() + "'");
    auto rec = load_record(*file, fs, entry.id);
    rec.label = entry.label;
    ds.add(std::move(rec));
  }
  return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  require(!ds.empty(), "cannot split an empty dataset");
  require(train_fraction > 0.0 && train_fraction <= 1.0, "train fraction must be in (0, 1]");

  // Strata in class order; unlabeled records form a final stratum.
  std::vector<std::vector<std::size_t>> strata(kNumClasses + 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& label = ds.records()[i].label;
    strata[label ? label_index(*label) : kNumClasses].push_back(i);
  }

  const auto total = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ds.size())));
  std::vector<std::size_t> take(strata.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const double exact = train_fraction * static_cast<double>(strata[s].size());
    take[s] = static_cast<std::size_t>(std::floor(exact));
    assigned += take[s];
    if (take[s] < strata[s].size()) remainders.emplace_back(exact - std::floor(exact), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; r < remainders.size() && assigned < total; ++r, ++assigned) {
    ++take[remainders[r].second];
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> in_train(ds.size(), false);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto members = strata[s];
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < take[s]; ++k) in_train[members[k]] = true;
  }

  Dataset train;
  Dataset val;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (in_train[i] ? train : val).add(ds.records()[i]);
  }
  return {std::move(train), std::move(val)};
}

}  // namespace ecgnet
