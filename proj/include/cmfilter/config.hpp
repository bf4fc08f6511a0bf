#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmfilter/csv_io.hpp"
#include "cmfilter/model_registry.hpp"

namespace cmf {

struct DeclaredConstants {
    std::optional<double> lambda_inf, lambda_sup, mu_sup, K_mu, K_sigma;
    bool any() const { return lambda_inf || lambda_sup || mu_sup || K_mu || K_sigma; }
    bool operator==(const DeclaredConstants&) const = default;
};

struct ExperimentParams {
    int T = 20;
    std::vector<int> resolutions{8, 16, 32, 64};
    long n_traj = 20;
    double C = 1.0;
    std::uint64_t seed = 1;
    int A_ref = 0;  // 0: 8x the largest resolution
    bool self_check = true;
    int n_probe = 64;
    long n_pairs = 1000;
    long n_trials = 1000;
    long n_concentration = 10000;
    std::optional<double> gamma;
    int workers = 1;
    bool operator==(const ExperimentParams&) const = default;
};

struct FilterParams {
    int resolution = 16;
    std::string build = "auto";  // auto | quadrature | monte_carlo | exact
    int mc_samples = 20000;
    int quad_order = 6;
    std::string trajectory;
    bool operator==(const FilterParams&) const = default;
};

struct RunConfig {
    ModelParams model;
    DeclaredConstants constants;
    ExperimentParams experiment;
    FilterParams filter;
    std::string output_dir = "out";
    bool operator==(const RunConfig&) const = default;
};

// Sections [model] [constants] [experiment] [filter] [output]; "key = value";
// lists are comma separated; lines starting with '#' or ';' are comments.
// Errors are ConfigError with the offending line number.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

// Analytic constants overridden by any declared values.
AssumptionConstants resolved_constants(const RunConfig& cfg);
SystemSpec make_system(const RunConfig& cfg);

// Key/value echo of the canonical config for output headers.
Metadata config_echo(const RunConfig& cfg);

}  // namespace cmf
