#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tether/sim.hpp"

namespace tether {

/// Build a scenario from a JSON document (text form). Every section is
/// optional and falls back to the documented defaults; unknown keys are
/// rejected. Throws ConfigError on schema violations and propagates
/// InfeasibleForceError / PathGeometryError from semantic validation.
Scenario parse_scenario_text(const std::string& json_text);

/// parse_scenario_text over the contents of a file. A missing or unreadable
/// file is a ConfigError.
Scenario load_scenario_file(const std::string& file_path);

/// Re-parse `json_text` with the values at the given dotted paths (e.g.
/// "guidance.kp") replaced. Unknown or non-numeric parameter paths are a
/// ConfigError. Used by parameter sweeps.
Scenario scenario_with_overrides(const std::string& json_text,
                                 const std::vector<std::pair<std::string, double>>& overrides);

/// The textual default configuration (point regulation with nominal human),
/// suitable as a starting point for user configs.
std::string default_config_text();

}  // namespace tether
