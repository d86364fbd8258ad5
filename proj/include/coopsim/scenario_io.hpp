#pragma once

// Scenario files: JSON with every field optional (defaults from
// default_scenario()), strict key checking and dotted-path overrides.

#include <string>
#include <string_view>

#include "coopsim/sim_engine.hpp"

namespace coopsim {

std::string scenario_to_json(const ScenarioConfig& cfg);
// Throws ParseError on malformed JSON and InvalidArgument on unknown keys,
// wrong types or invalid values.
ScenarioConfig scenario_from_json(std::string_view text);
// "default" selects the built-in scenario; anything else is a file path
// (IoError when unreadable).
ScenarioConfig load_scenario(const std::string& path_or_name);

// Applies "a.b.c=value". The path must name an existing field; value is
// parsed as JSON and falls back to a plain string.
void apply_override(ScenarioConfig& cfg, std::string_view assignment);

}  // namespace coopsim
