#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "ecgnet/error.hpp"

namespace ecgnet::cli {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  ensure(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1, "sha256 init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) ensure(EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount())) == 1,
                                "sha256 update failed");
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  ensure(EVP_DigestFinal_ex(ctx.get(), md.data(), &len) == 1, "sha256 final failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 15];
  }
  return hex;
}

Manifest::Manifest(std::string command, nlohmann::json options, fs::path out_dir)
    : command_(std::move(command)), options_(std::move(options)), out_dir_(std::move(out_dir)) {}

void Manifest::input(const fs::path& path) { inputs_[path.generic_string()] = sha256_file(path); }

void Manifest::output(const fs::path& path) {
  outputs_[fs::relative(path, out_dir_).generic_string()] = sha256_file(path);
}

void Manifest::note(const std::string& key, nlohmann::json value) { notes_[key] = std::move(value); }

void Manifest::write() const {
  const nlohmann::json j = {{"command", command_}, {"options", options_}, {"inputs", inputs_},
                            {"outputs", outputs_}, {"summary", notes_}};
  const auto path = out_dir_ / "manifest.json";
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace ecgnet::cli
