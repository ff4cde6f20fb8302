#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mshw/harness.hpp"
#include "mshw/scenario.hpp"

namespace mshw {

/// {"p": [...], "nu": [...], "P": [[...]]}; unknown keys raise ConfigError.
PhaseType phase_type_from_json(const nlohmann::json& j);

/// Scenario from a JSON object:
///   {"ph": {"p": [...], "nu": [...], "P": [[...]]},
///    "arrival": {"family": "exponential" | "deterministic" | "erlang" (k) |
///                "hyperexp2" (scv) | "lognormal" (scv)},
///    "patience": {"family": "exponential" (rate) | "deterministic" (value) |
///                 "uniform" (upper) | "weibull" (shape, scale) |
///                 "hyperexp2" (p1, rate1, rate2)},
///    "lambda": ..., "beta": ..., "regime": "critical" | "overloaded", "q": ...}
/// lambda defaults to mu when critical; q, when present, must match.
/// Unknown keys raise ConfigError.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& sc);

/// Experiment plan; "scenario" is an inline object or a file name resolved
/// against base_dir.
ExperimentPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

nlohmann::json read_json_file(const std::filesystem::path& file);
Scenario load_scenario(const std::filesystem::path& file);
ExperimentPlan load_plan(const std::filesystem::path& file);

/// FNV-1a of the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace mshw
