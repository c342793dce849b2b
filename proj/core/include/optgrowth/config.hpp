#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "optgrowth/evolution.hpp"

namespace optgrowth {

/// Names accepted by `preset = ...`.
const std::vector<std::string>& preset_names();
/// Built-in scenario; throws ValidationError for an unknown name.
Scenario preset(const std::string& name);

/// Parses an INI document with sections [geometry] [material] [bc] [load]
/// [objective] [balance] [solver] [run] [output] and an optional top-level
/// `preset` key applied before the explicit keys. Unknown keys, malformed
/// values and invalid settings raise ValidationError naming section.key.
Scenario parse_config(const std::string& text);
Scenario parse_config_file(const std::filesystem::path& path);

/// The resolved scenario as an INI document that parse_config accepts.
std::string describe(const Scenario& scenario);

std::string to_string(BoundaryKind k);
std::string to_string(ObjectiveKind k);
std::string to_string(BalanceMode m);
std::string to_string(BalanceRelation r);
std::string to_string(SolverPath p);
std::string to_string(GradientLinearization g);
std::string to_string(ShearWeight w);

}  // namespace optgrowth
