#pragma once

// Runs one subcommand of a validated scenario and writes its artifacts.

#include <filesystem>
#include <map>
#include <string>

#include "eitlock/harness/config.hpp"
#include "eitlock/harness/csv.hpp"

namespace eitlock::harness {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Subcommand { spectrum, error_signal, lock, beat, fit };
std::string to_string(Subcommand s);
Subcommand subcommand_from_string(const std::string& s);

struct RunManifest {
    std::string digest;
    std::string tool_version = kToolVersion;
    std::string subcommand;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> artifacts;  // name → path
    std::map<std::string, double> timings_s;
    nlohmann::json summary;                        // headline numbers of the run

    nlohmann::json to_json() const;
};

// Writes <out_dir>/<subcommand>/… (CSV, JSON, effective_config.json, manifest.json).
RunManifest run_scenario(const ScenarioConfig& config, Subcommand sub, const std::filesystem::path& out_dir);

// Pipelines behind the subcommands, usable without touching the filesystem.
Table spectrum_table(const ScenarioConfig& config);
struct ErrorSignalRun {
    fm::ErrorSignalTrace trace;
    fm::Crossing crossing;
    bool has_crossing = false;
    std::string crossing_error;
};
ErrorSignalRun error_signal_run(const ScenarioConfig& config);

}  // namespace eitlock::harness
