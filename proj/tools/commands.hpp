#pragma once

#include <string>

#include "run_config.hpp"

namespace ecgnet::cli {

// Each command throws Error on bad input and writes only under cfg.out.
// `options` is the resolved option set recorded in the manifest.
void cmd_synth(const RunConfig& cfg, const nlohmann::json& options);
void cmd_preprocess(const RunConfig& cfg, const nlohmann::json& options);
void cmd_detect(const RunConfig& cfg, const nlohmann::json& options);
void cmd_segment(const RunConfig& cfg, const nlohmann::json& options);
void cmd_train(const RunConfig& cfg, const nlohmann::json& options);
void cmd_evaluate(const RunConfig& cfg, const nlohmann::json& options);

}  // namespace ecgnet::cli
