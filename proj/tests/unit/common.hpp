#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <adversim/config.hpp>

namespace adversim::testing {

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string scenario_path(const std::string& name) {
  return std::string(ADVERSIM_SCENARIO_DIR) + "/" + name + ".json";
}

inline EngineConfig load_scenario(const std::string& name) {
  return parse_config(read_text(scenario_path(name)));
}

}  // namespace adversim::testing
