#pragma once

// Little-endian primitives shared by the record, segment-pack and checkpoint
// formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "ecgnet/error.hpp"

namespace ecgnet::binary {

template <typename U>
U byteswap_if_big(U value) {
  static_assert(std::is_unsigned_v<U>);
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out = static_cast<U>((out << 8) | ((value >> (8 * i)) & 0xFF));
    }
    return out;
  } else {
    return value;
  }
}

template <typename U>
void write_uint(std::ostream& out, U value) {
  value = byteswap_if_big(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U read_uint(std::istream& in) {
  U value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (!in) throw Error("unexpected end of binary stream");
  return byteswap_if_big(value);
}

inline void write_f32(std::ostream& out, float value) {
  write_uint(out, std::bit_cast<std::uint32_t>(value));
}

inline float read_f32(std::istream& in) { return std::bit_cast<float>(read_uint<std::uint32_t>(in)); }

inline void write_string(std::ostream& out, const std::string& s) {
  write_uint(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, std::uint32_t max_len = 1u << 20) {
  const auto n = read_uint<std::uint32_t>(in);
  if (n > max_len) throw Error("string length " + std::to_string(n) + " exceeds limit");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw Error("unexpected end of binary stream");
  return s;
}

}  // namespace ecgnet::binary
