#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gcl/taskparams.hpp"

namespace testing {

inline std::string fixture_path(const std::string& rel) { return std::string(GCL_FIXTURES) + "/" + rel; }

inline std::string read_fixture(const std::string& rel) {
  std::ifstream in(fixture_path(rel), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline gcl::TaskParameters task(const std::string& name) {
  return gcl::parameters_from_json(nlohmann::json::parse(read_fixture("tasks/" + name + ".json")));
}

inline std::vector<std::string> task_names() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(fixture_path("tasks"))) {
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::string> fixture_programs() {
  std::vector<std::string> out;
  for (const auto& dir : {"", "rapid", "drilling"}) {
    for (const auto& e : std::filesystem::directory_iterator(fixture_path(dir))) {
      if (e.path().extension() == ".gcode") {
        out.push_back(std::filesystem::relative(e.path(), fixture_path("")).string());
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace testing
