// Scenario runner: built-in gallery, line-oriented configs, reproducible
// JSON reports with CSV side files.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "coho/errors.hpp"

namespace coho {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string comparison = "<=";  // value vs threshold
};

struct ScenarioResult {
    std::string name;
    std::vector<CheckResult> checks;
    std::string details_json;  // per-operation results, already serialized
    std::vector<std::pair<std::string, std::string>> side_files;  // name -> content

    bool passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

struct ScenarioParams {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    /// Bracketed row list, e.g. [[2,1],[1,1]].  Throws ConfigError naming
    /// the field on malformed input.
    std::vector<std::vector<long>> get_int_matrix(const std::string& key) const;
};

/// Built-in scenario names with one-line descriptions.
std::vector<std::pair<std::string, std::string>> list_gallery();

/// Runs one gallery scenario.  Deterministic for a fixed seed and any
/// thread count.  Throws UnknownScenario for unlisted names.
ScenarioResult run_gallery_scenario(const std::string& name, const ScenarioParams& params,
                                    std::uint64_t seed, int threads);

/// Parses the line-oriented `key = value` config with bracketed sections.
/// Throws ConfigError naming the offending line/field.
std::map<std::string, ScenarioParams> parse_config(const std::string& text);

/// Loads a config file, resolves the scenario name and parameters, runs it.
ScenarioResult run_scenario_file(const std::string& path, std::uint64_t seed_override,
                                 bool has_seed_override, int threads);

/// Deterministic report serialization (schema-tagged); timings excluded.
std::string report_to_json(const ScenarioResult& result, std::uint64_t seed, int threads);

} // namespace coho
