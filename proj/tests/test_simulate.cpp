#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ftslab/simulate.hpp"

using namespace ftslab;

namespace {

SdeSystem scalar_system(const std::string& name, const std::string& drift,
                        const std::string& diffusion) {
    SdeSystem sys;
    sys.name = name;
    sys.dim = 1;
    sys.noise_dim = 1;
    sys.drift.push_back(Expression::parse(drift));
    sys.diffusion = {{Expression::parse(diffusion)}};
    sys.validate();
    return sys;
}

std::vector<double> settling_multiset(const TrajectoryEnsemble& ens) {
    std::vector<double> out;
    for (const auto& p : ens.paths) out.push_back(p.settling_time.value_or(-1.0));
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_CASE("frozen system at the origin settles immediately") {
    const auto sys = scalar_system("frozen", "0", "0");
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 1.0;
    cfg.store_paths = 1;
    const auto traj = simulate_path(sys, std::vector<double>{0.0}, cfg, 0, true);
    REQUIRE(traj.settling_time.has_value());
    CHECK(*traj.settling_time == 0.0);
    CHECK(traj.sup_norm == 0.0);
    CHECK(traj.min_norm == 0.0);
    for (double v : traj.states) CHECK(v == 0.0);
}

TEST_CASE("deterministic contraction settles near the closed-form time") {
    const auto sys = scalar_system("contract", "-x1", "0");
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 10.0;
    cfg.absorption_radius = std::exp(-5.0);
    const auto traj = simulate_path(sys, std::vector<double>{1.0}, cfg, 0);
    REQUIRE(traj.settling_time.has_value());
    CHECK(std::abs(*traj.settling_time - 5.0) <= 2.0 * cfg.dt + 1e-9);
}

TEST_CASE("absorption is permanent on recorded paths") {
    const auto sys = builtin_system("example1");
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 20.0;
    cfg.n_paths = 8;
    cfg.master_seed = 42;
    cfg.record_stride = 7;
    cfg.store_paths = 8;
    const auto ens = simulate_ensemble(sys, std::vector<double>{0.6}, cfg);
    int absorbed = 0;
    for (const auto& traj : ens.paths) {
        if (!traj.settling_time) continue;
        ++absorbed;
        CHECK(traj.min_norm == 0.0);
        for (std::size_t k = 0; k < traj.times.size(); ++k)
            if (traj.times[k] >= *traj.settling_time) CHECK(traj.states[k] == 0.0);
        CHECK(traj.times.back() == doctest::Approx(cfg.t_end).epsilon(1e-12));
        CHECK(traj.sup_norm >= 0.6);
    }
    CHECK(absorbed >= 6);  // example1 settles fast from 0.6
}

TEST_CASE("determinism: same seed, any worker count") {
    const auto sys = builtin_system("example1");
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 10.0;
    cfg.n_paths = 40;
    cfg.master_seed = 777;
    const auto a = simulate_ensemble(sys, std::vector<double>{0.6}, cfg, 1);
    const auto b = simulate_ensemble(sys, std::vector<double>{0.6}, cfg, 4);
    const auto c = simulate_ensemble(sys, std::vector<double>{0.6}, cfg, 2);
    CHECK(settling_multiset(a) == settling_multiset(b));
    CHECK(settling_multiset(a) == settling_multiset(c));
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        CHECK(a.paths[i].sup_norm == b.paths[i].sup_norm);
        CHECK(a.paths[i].min_norm == b.paths[i].min_norm);
    }

    SimConfig other = cfg;
    other.master_seed = 778;
    const auto d = simulate_ensemble(sys, std::vector<double>{0.6}, other);
    CHECK(settling_multiset(a) != settling_multiset(d));
}

TEST_CASE("settling times are non-decreasing under absorption refinement") {
    const auto sys = builtin_system("example1");
    SimConfig coarse;
    coarse.dt = 1e-3;
    coarse.t_end = 25.0;
    coarse.master_seed = 99;
    coarse.absorption_radius = 1e-2;
    SimConfig fine = coarse;
    fine.absorption_radius = 1e-3;
    for (std::int64_t p = 0; p < 20; ++p) {
        const auto a = simulate_path(sys, std::vector<double>{0.6}, coarse, p);
        const auto b = simulate_path(sys, std::vector<double>{0.6}, fine, p);
        if (a.settling_time && b.settling_time) CHECK(*b.settling_time >= *a.settling_time);
        if (b.settling_time) REQUIRE(a.settling_time.has_value());
    }
}

TEST_CASE("weak-order sanity: E[x(1)] for dx = -x dt + 0.1 x dW") {
    const auto sys = scalar_system("gbm", "-x1", "0.1*x1");
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 1.0;
    cfg.n_paths = 10000;
    cfg.master_seed = 2024;
    cfg.absorption_radius = 1e-12;
    cfg.record_stride = cfg.n_steps();  // record t0 and the final state only
    cfg.store_paths = cfg.n_paths;
    const auto ens = simulate_ensemble(sys, std::vector<double>{1.0}, cfg);
    double sum = 0.0;
    double sumsq = 0.0;
    for (const auto& traj : ens.paths) {
        const double xT = traj.states.back();
        sum += xT;
        sumsq += xT * xT;
    }
    const double n = static_cast<double>(cfg.n_paths);
    const double mean = sum / n;
    const double sd = std::sqrt((sumsq - n * mean * mean) / (n - 1.0));
    const double se = sd / std::sqrt(n);
    CHECK(std::abs(mean - std::exp(-1.0)) <= 3.0 * se + 1e-12);
}

TEST_CASE("annulus exit times") {
    const auto contract = scalar_system("contract", "-x1", "0");
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 5.0;
    cfg.n_paths = 3;
    auto stats = annulus_exit_time(contract, std::vector<double>{1.0}, 2.0, 0.5, cfg);
    CHECK(stats.fraction_exited == 1.0);
    CHECK(stats.inner_hits == 3);
    CHECK(stats.outer_hits == 0);
    CHECK(std::abs(stats.mean_exit_time - std::log(2.0)) <= 2.0 * cfg.dt + 1e-9);

    const auto expand = scalar_system("expand", "x1", "0");
    stats = annulus_exit_time(expand, std::vector<double>{1.5}, 2.0, 0.5, cfg);
    CHECK(stats.outer_hits == 3);
    CHECK(std::abs(stats.mean_exit_time - std::log(2.0 / 1.5)) <= 2.0 * cfg.dt + 1e-9);

    const auto frozen = scalar_system("frozen", "0", "0");
    stats = annulus_exit_time(frozen, std::vector<double>{1.0}, 2.0, 0.5, cfg);
    CHECK(stats.fraction_exited == 0.0);

    CHECK_THROWS_AS(annulus_exit_time(frozen, std::vector<double>{3.0}, 2.0, 0.5, cfg),
                    std::invalid_argument);

    const auto ex1 = builtin_system("example1");
    SimConfig mc;
    mc.dt = 1e-3;
    mc.t_end = 50.0;
    mc.n_paths = 200;
    mc.master_seed = 4;
    stats = annulus_exit_time(ex1, std::vector<double>{0.6}, 10.0, 0.01, mc);
    CHECK(stats.fraction_exited == 1.0);  // noisy contraction leaves the annulus in finite time
}

TEST_CASE("blow-up guard flags super-linear explosions") {
    const auto sys = scalar_system("cubic", "x1^3", "0");
    SimConfig cfg;
    cfg.dt = 0.1;
    cfg.t_end = 10.0;
    const auto traj = simulate_path(sys, std::vector<double>{2.0}, cfg, 0);
    CHECK(traj.blew_up);
    CHECK_FALSE(traj.settling_time.has_value());
    CHECK(traj.blowup_time > 0.0);

    cfg.n_paths = 3;
    const auto ens = simulate_ensemble(sys, std::vector<double>{2.0}, cfg);
    int blowups = 0;
    for (const auto& p : ens.paths)
        if (p.blew_up) ++blowups;
    CHECK(blowups == 3);  // flagged entries, not aborts
}

TEST_CASE("csv writers") {
    const auto sys = scalar_system("contract", "-x1", "0");
    SimConfig cfg;
    cfg.dt = 0.25;
    cfg.t_end = 1.0;
    cfg.n_paths = 2;
    cfg.store_paths = 2;
    const auto ens = simulate_ensemble(sys, std::vector<double>{1.0}, cfg);

    std::ostringstream traj;
    write_trajectories_csv(traj, ens);
    std::istringstream lines(traj.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "t,path,x1");

    std::ostringstream summary;
    write_summary_csv(summary, ens);
    std::istringstream sl(summary.str());
    std::getline(sl, header);
    CHECK(header == "path,settling_time,sup_norm,min_norm,absorbed,blowup");
    int rows = 0;
    std::string line;
    while (std::getline(sl, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SimConfig{};
    cfg.t_end = cfg.t0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SimConfig{};
    cfg.record_stride = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    const auto sys = scalar_system("contract", "-x1", "0");
    CHECK_THROWS_AS(simulate_path(sys, std::vector<double>{1.0, 2.0}, SimConfig{}, 0),
                    std::invalid_argument);
}
