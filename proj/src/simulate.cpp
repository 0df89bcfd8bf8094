#include "ftslab/simulate.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "ftslab/rng.hpp"

namespace ftslab {

namespace {

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

int pick_threads(int requested, std::int64_t n_jobs) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (n > 16) n = 16;
    if (static_cast<std::int64_t>(n) > n_jobs) n = static_cast<int>(n_jobs);
    return n;
}

template <typename PerPath>
void run_paths(std::int64_t n_paths, int n_threads, PerPath&& per_path) {
    if (n_threads <= 1) {
        for (std::int64_t i = 0; i < n_paths; ++i) per_path(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n_paths) return;
            per_path(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("sim.dt must be > 0");
    if (!(t_end > t0)) throw std::invalid_argument("sim.t_end must be > sim.t0");
    if (n_paths < 1) throw std::invalid_argument("sim.paths must be >= 1");
    if (!(absorption_radius > 0.0)) throw std::invalid_argument("sim.absorption_radius must be > 0");
    if (record_stride < 1) throw std::invalid_argument("sim.record_stride must be >= 1");
    if (store_paths < 0) throw std::invalid_argument("sim.store_paths must be >= 0");
}

std::int64_t SimConfig::n_steps() const {
    return static_cast<std::int64_t>(std::llround((t_end - t0) / dt));
}

Trajectory simulate_path(const SdeSystem& system, std::span<const double> x0,
                         const SimConfig& config, std::int64_t path_index, bool store) {
    const int r = system.dim;
    const int d = system.noise_dim;
    if (static_cast<int>(x0.size()) != r)
        throw std::invalid_argument("simulate_path: x0 dimension mismatch");

    Trajectory traj;
    traj.path_index = path_index;
    traj.stored = store;

    RandomStream rng(config.master_seed, static_cast<std::uint64_t>(path_index));
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> f(static_cast<std::size_t>(r));
    std::vector<double> g(static_cast<std::size_t>(r * d));
    std::vector<double> dw(static_cast<std::size_t>(d));

    const double sqrt_dt = std::sqrt(config.dt);
    const std::int64_t steps = config.n_steps();

    const double n0 = norm2(x);
    traj.sup_norm = n0;
    traj.min_norm = n0;

    auto record = [&](double t, std::span<const double> state) {
        if (!store) return;
        traj.times.push_back(t);
        traj.states.insert(traj.states.end(), state.begin(), state.end());
    };
    auto record_zero_tail = [&](std::int64_t from_step) {
        // State is pinned at 0 after absorption; emit the remaining strided rows.
        if (!store) return;
        const std::vector<double> zero(static_cast<std::size_t>(r), 0.0);
        for (std::int64_t k = from_step; k <= steps; ++k)
            if (k % config.record_stride == 0 || k == steps)
                record(config.t0 + static_cast<double>(k) * config.dt, zero);
    };

    if (n0 <= config.absorption_radius) {
        traj.settling_time = config.t0;
        traj.min_norm = 0.0;
        record_zero_tail(0);
        return traj;
    }
    record(config.t0, x);

    for (std::int64_t k = 0; k < steps; ++k) {
        const double t = config.t0 + static_cast<double>(k) * config.dt;
        try {
            system.drift_at(t, x, f);
            system.diffusion_at(t, x, g);
        } catch (const EvalError&) {
            traj.blew_up = true;
            traj.blowup_time = t;
            return traj;
        }
        for (int j = 0; j < d; ++j) dw[static_cast<std::size_t>(j)] = sqrt_dt * rng.normal();
        for (int i = 0; i < r; ++i) {
            double acc = x[static_cast<std::size_t>(i)] + f[static_cast<std::size_t>(i)] * config.dt;
            for (int j = 0; j < d; ++j)
                acc += g[static_cast<std::size_t>(i * d + j)] * dw[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] = acc;
        }

        const double t_next = config.t0 + static_cast<double>(k + 1) * config.dt;
        const double nrm = norm2(x);
        if (!std::isfinite(nrm) || nrm > config.blowup_threshold) {
            traj.blew_up = true;
            traj.blowup_time = t_next;
            return traj;
        }
        traj.sup_norm = std::max(traj.sup_norm, nrm);

        if (nrm <= config.absorption_radius) {
            traj.settling_time = t_next;
            traj.min_norm = 0.0;
            record(t_next, std::vector<double>(static_cast<std::size_t>(r), 0.0));
            record_zero_tail(k + 2);
            return traj;
        }
        if ((k + 1) % config.record_stride == 0 || k + 1 == steps) {
            traj.min_norm = std::min(traj.min_norm, nrm);
            record(t_next, x);
        }
    }
    return traj;
}

TrajectoryEnsemble simulate_ensemble(const SdeSystem& system, std::span<const double> x0,
                                     const SimConfig& config, int n_threads) {
    config.validate();
    TrajectoryEnsemble ens;
    ens.config = config;
    ens.system_name = system.name;
    ens.dim = system.dim;
    ens.x0.assign(x0.begin(), x0.end());
    ens.paths.resize(static_cast<std::size_t>(config.n_paths));

    run_paths(config.n_paths, pick_threads(n_threads, config.n_paths), [&](std::int64_t i) {
        ens.paths[static_cast<std::size_t>(i)] =
            simulate_path(system, x0, config, i, i < config.store_paths);
    });
    return ens;
}

AnnulusExitStats annulus_exit_time(const SdeSystem& system, std::span<const double> x0,
                                   double outer_radius, double inner_radius,
                                   const SimConfig& config, int n_threads) {
    config.validate();
    if (!(inner_radius > 0.0) || !(outer_radius > inner_radius))
        throw std::invalid_argument("annulus_exit_time: need 0 < inner < outer");
    const double n0 = norm2(x0);
    if (!(n0 > inner_radius && n0 < outer_radius))
        throw std::invalid_argument("annulus_exit_time: x0 must lie in the open annulus");

    const int r = system.dim;
    const int d = system.noise_dim;
    const std::int64_t steps = config.n_steps();
    const double sqrt_dt = std::sqrt(config.dt);

    struct Exit {
        bool exited = false;
        bool inner = false;
        double time = 0.0;
    };
    std::vector<Exit> exits(static_cast<std::size_t>(config.n_paths));

    run_paths(config.n_paths, pick_threads(n_threads, config.n_paths), [&](std::int64_t p) {
        RandomStream rng(config.master_seed, static_cast<std::uint64_t>(p));
        std::vector<double> x(x0.begin(), x0.end());
        std::vector<double> f(static_cast<std::size_t>(r));
        std::vector<double> g(static_cast<std::size_t>(r * d));
        std::vector<double> dw(static_cast<std::size_t>(d));
        for (std::int64_t k = 0; k < steps; ++k) {
            const double t = config.t0 + static_cast<double>(k) * config.dt;
            try {
                system.drift_at(t, x, f);
                system.diffusion_at(t, x, g);
            } catch (const EvalError&) {
                return;  // not an annulus exit; path dropped from the exit count
            }
            for (int j = 0; j < d; ++j) dw[static_cast<std::size_t>(j)] = sqrt_dt * rng.normal();
            for (int i = 0; i < r; ++i) {
                double acc = x[static_cast<std::size_t>(i)] + f[static_cast<std::size_t>(i)] * config.dt;
                for (int j = 0; j < d; ++j)
                    acc += g[static_cast<std::size_t>(i * d + j)] * dw[static_cast<std::size_t>(j)];
                x[static_cast<std::size_t>(i)] = acc;
            }
            const double nrm = norm2(x);
            if (!std::isfinite(nrm)) return;
            if (nrm <= inner_radius || nrm >= outer_radius) {
                auto& e = exits[static_cast<std::size_t>(p)];
                e.exited = true;
                e.inner = nrm <= inner_radius;
                e.time = config.t0 + static_cast<double>(k + 1) * config.dt;
                return;
            }
        }
    });

    AnnulusExitStats stats;
    stats.n = config.n_paths;
    double sum = 0.0;
    for (const auto& e : exits) {
        if (!e.exited) continue;
        ++stats.exited;
        if (e.inner)
            ++stats.inner_hits;
        else
            ++stats.outer_hits;
        sum += e.time;
        stats.max_exit_time = std::max(stats.max_exit_time, e.time);
    }
    if (stats.exited > 0) stats.mean_exit_time = sum / static_cast<double>(stats.exited);
    stats.fraction_exited = static_cast<double>(stats.exited) / static_cast<double>(stats.n);
    return stats;
}

void write_trajectories_csv(std::ostream& os, const TrajectoryEnsemble& ensemble,
                            const std::string& extra_column_name,
                            const std::function<double(double, std::span<const double>)>& extra_column) {
    os << "t,path";
    for (int i = 1; i <= ensemble.dim; ++i) os << ",x" << i;
    if (!extra_column_name.empty()) os << ',' << extra_column_name;
    os << '\n';
    for (const auto& traj : ensemble.paths) {
        if (!traj.stored) continue;
        const std::size_t r = static_cast<std::size_t>(ensemble.dim);
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            os << format_value(traj.times[k]) << ',' << traj.path_index;
            const std::span<const double> row(traj.states.data() + k * r, r);
            for (double v : row) os << ',' << format_value(v);
            if (extra_column) os << ',' << format_value(extra_column(traj.times[k], row));
            os << '\n';
        }
    }
}

void write_summary_csv(std::ostream& os, const TrajectoryEnsemble& ensemble) {
    os << "path,settling_time,sup_norm,min_norm,absorbed,blowup\n";
    for (const auto& traj : ensemble.paths) {
        os << traj.path_index << ','
           << (traj.settling_time ? format_value(*traj.settling_time) : "nan") << ','
           << format_value(traj.sup_norm) << ',' << format_value(traj.min_norm) << ','
           << (traj.absorbed() ? 1 : 0) << ',' << (traj.blew_up ? 1 : 0) << '\n';
    }
}

} // namespace ftslab
