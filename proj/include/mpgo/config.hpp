#pragma once

#include <string>

#include "mpgo/experiments.hpp"

namespace mpgo {

struct RunConfig {
  Scenario scenario;
  int threads = 1;
};

// strict JSON parsing: unknown keys, wrong types or a schema other than 1 raise ConfigError
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& c);
// MPGO_OUTPUT_DIR replaces the configured output directory when set
void apply_env_overrides(RunConfig& c);

}  // namespace mpgo
