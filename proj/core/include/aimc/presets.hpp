#pragma once

#include "aimc/config.hpp"

#include <string>
#include <vector>

namespace aimc {

std::vector<std::string> preset_names();

/// One-line description shown by `aimc-sim list-presets`.
std::string preset_description(const std::string& name);

/// Config text of a preset, in the same format `load_config` reads.
std::string preset_text(const std::string& name);

/// Throws UnknownPreset for names outside preset_names().
ExperimentConfig preset(const std::string& name);

}  // namespace aimc
