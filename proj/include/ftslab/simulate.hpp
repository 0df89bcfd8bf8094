#pragma once

// Euler-Maruyama sample paths with absorption at the origin. Absorption is
// the numeric stand-in for the stochastic settling time: at the first step
// with |x| <= absorption_radius the settling time is recorded and the state
// is pinned to exactly 0 (valid since f(t,0) = g(t,0) = 0).

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "ftslab/systems.hpp"

namespace ftslab {

struct SimConfig {
    double dt = 1e-3;
    double t0 = 0.0;
    double t_end = 10.0;
    std::int64_t n_paths = 1;
    std::uint64_t master_seed = 0;
    double absorption_radius = 1e-3;
    std::int64_t record_stride = 1;
    std::int64_t store_paths = 0;  // keep full (strided) series for the first k paths
    double blowup_threshold = 1e12;

    void validate() const;
    std::int64_t n_steps() const;
};

struct Trajectory {
    std::int64_t path_index = 0;
    std::optional<double> settling_time;  // empty: not absorbed by t_end
    double sup_norm = 0.0;                // running max of |x|, every step
    double min_norm = 0.0;                // running min of |x| over recorded steps
    bool blew_up = false;
    double blowup_time = 0.0;
    bool stored = false;
    std::vector<double> times;   // only when stored
    std::vector<double> states;  // row-major times.size() x dim, only when stored

    bool absorbed() const { return settling_time.has_value(); }
};

struct TrajectoryEnsemble {
    SimConfig config;
    std::string system_name;
    int dim = 0;
    std::vector<double> x0;
    std::vector<Trajectory> paths;
};

Trajectory simulate_path(const SdeSystem& system, std::span<const double> x0,
                         const SimConfig& config, std::int64_t path_index, bool store = false);

/// Runs n_paths independent paths; bit-identical for a fixed master seed
/// regardless of the worker count (per-path RNG streams, results keyed by
/// path index). n_threads = 0 picks the hardware concurrency.
TrajectoryEnsemble simulate_ensemble(const SdeSystem& system, std::span<const double> x0,
                                     const SimConfig& config, int n_threads = 0);

struct AnnulusExitStats {
    std::int64_t n = 0;
    std::int64_t exited = 0;
    std::int64_t inner_hits = 0;  // |x| <= inner radius first
    std::int64_t outer_hits = 0;  // |x| >= outer radius first
    double mean_exit_time = 0.0;  // over exited paths
    double max_exit_time = 0.0;
    double fraction_exited = 0.0;
};

/// First time |x(t)| leaves the open annulus (inner, outer); no absorption
/// pinning inside. Requires inner < |x0| < outer.
AnnulusExitStats annulus_exit_time(const SdeSystem& system, std::span<const double> x0,
                                   double outer_radius, double inner_radius,
                                   const SimConfig& config, int n_threads = 0);

/// Header `t,path,x1..xr`; optional extra column recomputed from the recorded
/// states (used for the control input of the closed-loop example).
void write_trajectories_csv(std::ostream& os, const TrajectoryEnsemble& ensemble,
                            const std::string& extra_column_name = {},
                            const std::function<double(double, std::span<const double>)>&
                                extra_column = nullptr);

/// Header `path,settling_time,sup_norm,min_norm,absorbed,blowup`.
void write_summary_csv(std::ostream& os, const TrajectoryEnsemble& ensemble);

} // namespace ftslab
