#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace ecgnet::cli {

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Run record written as <out>/manifest.json: command, resolved options and
// content hashes of every file read and written. Output paths are relative to
// the output directory so identical runs give identical manifests.
class Manifest {
 public:
  Manifest(std::string command, nlohmann::json options, std::filesystem::path out_dir);

  void input(const std::filesystem::path& path);
  void output(const std::filesystem::path& path);
  void note(const std::string& key, nlohmann::json value);
  void write() const;

 private:
  std::string command_;
  nlohmann::json options_;
  std::filesystem::path out_dir_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  nlohmann::json notes_ = nlohmann::json::object();
};

}  // namespace ecgnet::cli
