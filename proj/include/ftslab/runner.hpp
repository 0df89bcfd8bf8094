#pragma once

// Config-driven pipelines behind the CLI and the C API: load a run config,
// execute certify and/or simulate+estimate stages, and assemble the
// machine-readable stability report (stable key order, config echo + hash).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftslab/certify.hpp"
#include "ftslab/estimate.hpp"
#include "ftslab/simulate.hpp"

namespace ftslab {

using ordered_json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> paths;
};

struct RunResult {
    ordered_json report;
    int exit_code = 0;  // 0: everything passed; 2: violations or failed verdicts
};

struct CheckRequest {
    std::string name;                 // envelope | fts | instability | linear_growth | lemma23
    std::optional<double> declared_H; // linear_growth
    Expression lemma23_l;             // lemma23
    double lemma23_d_u = 0.0;
};

struct UasfRequest {
    bool fit = false;
    double c = 0.0;
    double d = 0.0;
    double horizon = 100.0;
    std::int64_t n_grid = 1000;
};

struct InstabilityRequest {
    Expression a;
    double a_integral_bound = 0.0;
};

struct EstimateRequest {
    std::optional<double> nonattraction_epsilon;  // defaults to the absorption radius
    std::optional<double> containment_R;
};

struct RunConfig {
    ordered_json echo;
    SdeSystem system;
    std::optional<LyapunovSpec> lyapunov;
    std::optional<PowerClassK> gamma_low;
    std::optional<PowerClassK> gamma_high;
    std::optional<Expression> mu;
    std::optional<UasfRequest> uasf;
    std::optional<InstabilityRequest> instability;
    std::optional<SimConfig> sim;
    std::vector<double> x0;
    SampleSpec sample;
    std::vector<CheckRequest> checks;
    std::optional<std::pair<double, double>> delta;  // (epsilon, R)
    EstimateRequest estimate;
};

/// Parses and validates; throws ConfigError with the offending key path.
RunConfig load_config(const ordered_json& doc);
ordered_json read_config_file(const std::string& path);

RunResult run_certify(const ordered_json& config, const RunOverrides& overrides = {});
RunResult run_certify_file(const std::string& config_path, const RunOverrides& overrides = {});

/// Writes trajectories.csv, summary.csv, and report.json under out_dir.
RunResult run_simulate(const ordered_json& config, const std::string& out_dir,
                       const RunOverrides& overrides = {});
RunResult run_simulate_file(const std::string& config_path, const std::string& out_dir,
                            const RunOverrides& overrides = {});

/// Runs the shipped canonical config for a built-in example end to end
/// (certificate checks, then simulation and estimates).
RunResult run_reproduce(const std::string& name, const std::string& out_dir,
                        const RunOverrides& overrides = {});

/// Embedded canonical config text for example1|example2|example3|instability1.
const char* canonical_config_text(const std::string& name);

} // namespace ftslab
