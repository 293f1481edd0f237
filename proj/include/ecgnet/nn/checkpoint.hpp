#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ecgnet/binary_io.hpp"
#include "ecgnet/error.hpp"
#include "ecgnet/nn/tensor.hpp"

namespace ecgnet::nn {

// Flat binary checkpoint, little-endian:
//   u32 format version, u32 entry count,
//   per entry: u32 name length, name bytes, u32 rank, rank x u32 extents,
//              f32 data in row-major order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor<T>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  binary::write_uint(out, kCheckpointVersion);
  binary::write_uint(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    binary::write_string(out, e.name);
    binary::write_uint(out, static_cast<std::uint32_t>(e.tensor->rank()));
    for (const auto d : e.tensor->shape()) binary::write_uint(out, static_cast<std::uint32_t>(d));
    for (const auto v : e.tensor->data()) binary::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw Error("failed writing checkpoint '" + path.string() + "'");
}

inline std::map<std::string, Tensor<float>> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  const auto version = binary::read_uint<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error("checkpoint '" + path.string() + "' has unsupported version " + std::to_string(version));
  }
  const auto count = binary::read_uint<std::uint32_t>(in);
  std::map<std::string, Tensor<float>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = binary::read_string(in);
    const auto rank = binary::read_uint<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw Error("checkpoint entry '" + name + "' has invalid rank");
    Shape shape(rank);
    for (auto& d : shape) {
      d = binary::read_uint<std::uint32_t>(in);
      if (d == 0) throw Error("checkpoint entry '" + name + "' has a zero extent");
    }
    std::vector<float> data(shape_size(shape));
    for (auto& v : data) v = binary::read_f32(in);
    if (!out.emplace(name, Tensor<float>(shape, std::move(data))).second) {
      throw Error("checkpoint has duplicate entry '" + name + "'");
    }
  }
  return out;
}

// Copies checkpoint entries into `targets`; names and shapes must match exactly.
template <typename T>
void load_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor<T>>& targets) {
  const auto entries = read_checkpoint(path);
  if (entries.size() != targets.size()) {
    throw Error("checkpoint '" + path.string() + "' holds " + std::to_string(entries.size()) +
                " tensors, model expects " + std::to_string(targets.size()));
  }
  for (const auto& t : targets) {
    const auto it = entries.find(t.name);
    if (it == entries.end()) throw Error("checkpoint is missing '" + t.name + "'");
    if (it->second.shape() != t.tensor->shape()) {
      throw Error("checkpoint entry '" + t.name + "' has shape " + shape_string(it->second.shape()) +
                  ", model expects " + shape_string(t.tensor->shape()));
    }
    for (std::size_t i = 0; i < it->second.size(); ++i) (*t.tensor)[i] = static_cast<T>(it->second[i]);
  }
}

}  // namespace ecgnet::nn
