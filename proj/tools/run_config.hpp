#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "ecgnet/preprocess.hpp"
#include "ecgnet/qrs_detect.hpp"
#include "ecgnet/segmenter.hpp"
#include "ecgnet/synth.hpp"
#include "ecgnet/training.hpp"

namespace ecgnet::cli {

// Everything a command can be configured with. Each field is bound to one
// flag; a config file may set the same keys (flag name without dashes).
struct RunConfig {
  std::filesystem::path data_dir;
  std::filesystem::path reference;  // default: <data_dir>/REFERENCE.csv
  std::filesystem::path out;
  std::filesystem::path config_file;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  double fs = 300.0;
  bool preprocessed = false;
  std::string noisy = "drop";

  FilterSpec filter;
  std::size_t max_len = kDefaultMaxLength;
  DualSlopeParams detector;
  SegmentConfig segments;
  CorpusSpec corpus;

  std::string scheme = "cascade";
  bool tiny = false;
  TrainConfig train;

  std::filesystem::path checkpoint;
  std::filesystem::path model_json;  // default: model.json beside the checkpoint
  std::filesystem::path split;
  std::string subset = "val";

  PipelineConfig pipeline(bool already_preprocessed) const;
  std::filesystem::path reference_path() const;
};

// `key = value` lines; `#` starts a comment. Duplicate keys are an error.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Fills options of `app` and `sub` that were not given on the command line.
// Every key must name an option of some subcommand.
void apply_config(CLI::App& app, CLI::App& sub, const std::map<std::string, std::string>& values);

// Resolved option values of `app` and `sub`, keyed like the config file.
nlohmann::json resolved_options(const CLI::App& app, const CLI::App& sub);

}  // namespace ecgnet::cli
