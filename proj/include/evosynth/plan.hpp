#pragma once

#include <filesystem>

#include "evosynth/evolution.hpp"
#include "json.hpp"

namespace evosynth {

inline constexpr const char* kToolVersion = "0.1.0";

// JSON keys mirror ExperimentPlan; absent keys keep their defaults. Throws
// ConfigError on unknown keys, wrong types or invalid values.
ExperimentPlan plan_from_json(const nlohmann::json& doc);
ExperimentPlan load_plan(const std::filesystem::path& path);
nlohmann::json plan_to_json(const ExperimentPlan& plan);

// Compiler / OS description recorded in run manifests.
std::string platform_note();

}  // namespace evosynth
