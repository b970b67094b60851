#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace perturba {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Raw key=value settings, in the order of precedence they were merged.
using ConfigMap = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment. Throws InvalidConfig on malformed lines.
ConfigMap parse_config_text(const std::string& text);

/// Either a key=value file or a manifest JSON written by a previous run.
ConfigMap load_config_file(const std::string& path);

struct ExperimentSettings {
    std::string experiment;                    // stability | regular-stability | tower | normfix-sweep | triangularize-sweep
    std::vector<std::size_t> composition{2, 2, 2};
    std::size_t vertices = 0;                  // with `pairs`, overrides the composition's nest pattern
    std::string pairs;                         // "1:2,2:3", 1-based, closed transitively
    std::size_t multiplicity = 2;
    std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    std::size_t depth = 4;                     // tower
    std::size_t dimension = 8;                 // normfix-sweep
    bool free_range = false;                   // triangularize-sweep: inputs without block-diagonal range
    std::size_t threads = 1;
    bool timing = false;

    /// Canonical key=value form; feeding it back reproduces the settings.
    ConfigMap to_map() const;
};

/// Later maps override earlier ones. Unknown keys and bad values throw InvalidConfig.
ExperimentSettings settings_from(const ConfigMap& merged);

struct ExperimentRow {
    std::size_t trial = 0;
    double epsilon = 0.0;
    double defect_in = 0.0;
    double recovery_distance = 0.0;
    double structural_residual = 0.0;
    double runtime_ms = 0.0;
    std::string status = "OK";                 // or FAILED:<stage>
};

struct ExperimentResult {
    ExperimentSettings settings;
    std::vector<ExperimentRow> rows;           // epsilon-major, trial order
};

ExperimentResult run_experiment(const ExperimentSettings& settings);

std::string results_csv(const ExperimentResult& result);
std::string manifest_json(const ExperimentResult& result, const std::string& csv_path);

/// Median recovery distance of the OK rows at one epsilon; nullopt if there are none.
std::optional<double> median_recovery(const ExperimentResult& result, double epsilon);

} // namespace perturba
