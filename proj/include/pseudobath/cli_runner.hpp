// cli_runner.hpp: JSON scenarios and the figure presets
//
// A scenario is a JSON object:
//   bath   {eta, lambda_c, n_modes, omega_min, omega_max, temperature}
//   pm     {omega, g}            g is a number or [re, im]
//   system {omega_sys, n_sys0}   required for task "dynamics"
//   task   "bcf" | "bcf-heisenberg" | "extract-sd" | "dynamics"
//   params task parameters (grids, kinds, part, t_cm, window, ...)
//   output {prefix}
// Grids are {start, stop, step} objects or explicit arrays. All quantities are in units of Λ.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace pseudobath {

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr int kManifestSchemaVersion = 1;

std::string library_version();

struct ValidationReport {
    bool valid = true;
    std::vector<std::string> errors;   // "field: message"
    std::vector<std::string> warnings;
    double recurrence_horizon = 0.0;
    std::uint64_t memory_estimate_bytes = 0;
    nlohmann::json resolved;           // scenario with all defaults filled in

    nlohmann::json to_json() const;
};

// Dry run: schema, defaults, recurrence horizon vs. requested grids, eigenproblem memory.
ValidationReport validate_scenario(const nlohmann::json& scenario);

struct RunResult {
    std::vector<std::filesystem::path> outputs; // CSV files, then the manifest
    std::filesystem::path manifest;
    nlohmann::json manifest_json;
};

// Executes a scenario, writing CSVs and <prefix>.manifest.json into out_dir. Throws ConfigError
// (with the validation messages) for invalid scenarios; numeric failures propagate.
RunResult run_scenario(const nlohmann::json& scenario, const std::filesystem::path& out_dir);

struct Preset {
    std::string name;
    std::string description;
    std::vector<nlohmann::json> scenarios;
};

std::vector<std::string> preset_names();
Preset get_preset(const std::string& name); // ConfigError for unknown names

// Directory for cached eigensystems from PSEUDOBATH_CACHE_DIR, or empty if unset.
std::filesystem::path eigen_cache_dir();

} // namespace pseudobath
