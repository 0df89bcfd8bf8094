#pragma once

// Statistical verdicts over simulated ensembles: empirical settling times
// against the closed-form bounds, containment against delta(eps, R), and
// non-attraction evidence for the instability regime. PASS/FAIL policy:
// mean + 3*stderr against the bound, absorbed fraction >= 0.95.

#include <cstdint>
#include <string>

#include "ftslab/simulate.hpp"

namespace ftslab {

struct SettlingStats {
    std::int64_t n = 0;
    std::int64_t absorbed_count = 0;
    double mean = 0.0;     // over absorbed paths; meaningful only when absorbed_count >= 1
    double stderr_ = 0.0;  // sample standard error of the mean
    double max = 0.0;
    double fraction_absorbed = 0.0;
    double absorption_radius = 0.0;
    std::int64_t blowup_count = 0;
};

SettlingStats settling_statistics(const TrajectoryEnsemble& ensemble);

enum class BoundVerdict { Pass, Fail, Inconclusive };

const char* to_string(BoundVerdict v);

struct BoundCheck {
    BoundVerdict verdict = BoundVerdict::Inconclusive;
    double bound = 0.0;
    double mean_plus_3se = 0.0;
    double fraction_absorbed = 0.0;
};

/// PASS iff mean + 3*stderr <= bound and fraction >= 0.95; INCONCLUSIVE when
/// fraction < 0.95 (horizon too short); FAIL otherwise.
BoundCheck bound_check(const SettlingStats& stats, double bound);

struct ProportionEstimate {
    double estimate = 0.0;
    double ci_low = 0.0;  // Wilson 95% interval
    double ci_high = 0.0;
    std::int64_t successes = 0;
    std::int64_t n = 0;
};

/// Fraction of paths whose running max |x(t)| stayed below R.
ProportionEstimate containment_probability(const TrajectoryEnsemble& ensemble, double R);

/// Fraction of paths whose min over recorded times of |x(t)| is <= eps.
/// Run with record_stride = 1 so near-hits are not missed.
double nonattraction_fraction(const TrajectoryEnsemble& ensemble, double eps);

} // namespace ftslab
