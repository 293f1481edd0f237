#include "run_config.hpp"

#include <fstream>

#include "ecgnet/error.hpp"

namespace ecgnet::cli {

namespace fs = std::filesystem;

PipelineConfig RunConfig::pipeline(bool already_preprocessed) const {
  PipelineConfig p;
  p.filter = filter;
  p.filter.fs = fs;
  p.detector = detector;
  p.segments = segments;
  p.max_len = max_len;
  p.already_preprocessed = already_preprocessed;
  p.jobs = jobs;
  return p;
}

fs::path RunConfig::reference_path() const { return reference.empty() ? data_dir / "REFERENCE.csv" : reference; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

CLI::Option* find_option(CLI::App& app, const std::string& key) {
  for (auto* opt : app.get_options()) {
    if (opt->check_lname(key) || (opt->get_lnames().empty() && opt->get_name() == key)) return opt;
  }
  return nullptr;
}

std::string key_of(const CLI::Option* opt) {
  return opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
}

void collect(const CLI::App& app, nlohmann::json& out) {
  for (const auto* opt : app.get_options()) {
    const auto key = key_of(opt);
    if (key == "help" || key == "config") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      out[key] = r.size() == 1 ? r.front() : CLI::detail::join(r, ",");
    } else {
      out[key] = opt->get_default_str();
    }
  }
}

}  // namespace

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config file not found: '" + path.string() + "'");
  std::map<std::string, std::string> values;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto where = path.string() + " line " + std::to_string(n);
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(where + ": expected 'key = value'");
    auto key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(where + ": empty key");
    if (!values.emplace(key, value).second) throw Error(where + ": duplicate key '" + key + "'");
  }
  return values;
}

void apply_config(CLI::App& app, CLI::App& sub, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    bool known = find_option(app, key) != nullptr;
    for (auto* other : app.get_subcommands({})) known = known || find_option(*other, key) != nullptr;
    if (!known) throw Error("config key '" + key + "' does not match any option");
    for (CLI::App* scope : {&app, &sub}) {
      auto* opt = find_option(*scope, key);
      if (opt == nullptr || opt->count() > 0) continue;
      try {
        opt->add_result(value);
        opt->run_callback();
      } catch (const CLI::Error& e) {
        throw Error("config key '" + key + "': " + e.what());
      }
    }
  }
}

nlohmann::json resolved_options(const CLI::App& app, const CLI::App& sub) {
  nlohmann::json out = nlohmann::json::object();
  collect(app, out);
  collect(sub, out);
  return out;
}

}  // namespace ecgnet::cli
