#include "ftslab/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ftslab {

SettlingStats settling_statistics(const TrajectoryEnsemble& ensemble) {
    if (ensemble.paths.empty()) throw std::invalid_argument("settling_statistics: empty ensemble");
    SettlingStats stats;
    stats.n = static_cast<std::int64_t>(ensemble.paths.size());
    stats.absorption_radius = ensemble.config.absorption_radius;

    // Summation over sorted values keeps the statistics invariant under path
    // reordering.
    std::vector<double> times;
    times.reserve(ensemble.paths.size());
    for (const auto& traj : ensemble.paths) {
        if (traj.blew_up) ++stats.blowup_count;
        if (traj.absorbed()) times.push_back(*traj.settling_time);
    }
    std::sort(times.begin(), times.end());
    stats.absorbed_count = static_cast<std::int64_t>(times.size());
    stats.fraction_absorbed =
        static_cast<double>(stats.absorbed_count) / static_cast<double>(stats.n);
    if (!times.empty()) {
        stats.max = times.back();
        double sum = 0.0;
        for (double v : times) sum += v;
        stats.mean = sum / static_cast<double>(times.size());
        if (times.size() >= 2) {
            double ss = 0.0;
            for (double v : times) {
                const double diff = v - stats.mean;
                ss += diff * diff;
            }
            const double var = ss / static_cast<double>(times.size() - 1);
            stats.stderr_ = std::sqrt(var / static_cast<double>(times.size()));
        }
    }
    return stats;
}

const char* to_string(BoundVerdict v) {
    switch (v) {
        case BoundVerdict::Pass: return "PASS";
        case BoundVerdict::Fail: return "FAIL";
        case BoundVerdict::Inconclusive: return "INCONCLUSIVE";
    }
    return "INCONCLUSIVE";
}

BoundCheck bound_check(const SettlingStats& stats, double bound) {
    BoundCheck check;
    check.bound = bound;
    check.fraction_absorbed = stats.fraction_absorbed;
    check.mean_plus_3se = stats.absorbed_count >= 1 ? stats.mean + 3.0 * stats.stderr_ : 0.0;
    if (stats.fraction_absorbed < 0.95 || stats.absorbed_count < 1) {
        check.verdict = BoundVerdict::Inconclusive;
    } else if (check.mean_plus_3se <= bound) {
        check.verdict = BoundVerdict::Pass;
    } else {
        check.verdict = BoundVerdict::Fail;
    }
    return check;
}

ProportionEstimate containment_probability(const TrajectoryEnsemble& ensemble, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("containment_probability: R must be > 0");
    if (ensemble.paths.empty())
        throw std::invalid_argument("containment_probability: empty ensemble");
    ProportionEstimate est;
    est.n = static_cast<std::int64_t>(ensemble.paths.size());
    for (const auto& traj : ensemble.paths)
        if (traj.sup_norm < R) ++est.successes;

    const double n = static_cast<double>(est.n);
    const double phat = static_cast<double>(est.successes) / n;
    const double z = 1.959963984540054;  // 95% two-sided
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    est.estimate = phat;
    est.ci_low = std::max(0.0, center - half);
    est.ci_high = std::min(1.0, center + half);
    return est;
}

double nonattraction_fraction(const TrajectoryEnsemble& ensemble, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("nonattraction_fraction: eps must be > 0");
    if (ensemble.paths.empty())
        throw std::invalid_argument("nonattraction_fraction: empty ensemble");
    std::int64_t hits = 0;
    for (const auto& traj : ensemble.paths)
        if (traj.min_norm <= eps) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ensemble.paths.size());
}

} // namespace ftslab
