#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dualfeed/scenario.hpp"

namespace dualfeed::cli {

/// Parses scenario text (YAML). Unknown keys, bad values and invariant
/// violations raise ScenarioError naming the key and, when known, its line.
ScenarioConfig parse_scenario(std::string_view text);

ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Full YAML rendering with every key spelled out; parses back to an equal config.
std::string write_scenario(const ScenarioConfig& config);

}  // namespace dualfeed::cli
