#pragma once

// Numerical verification of the Lyapunov/UASF certificate conditions and the
// closed-form conclusions (settling-time bound, stability radius). Condition
// checks are sampling-based over a seeded box in (t, x): a zero-violation
// report is evidence, not proof.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ftslab/expr.hpp"
#include "ftslab/systems.hpp"

namespace ftslab {

/// Class-K-infinity function restricted to the power form a*s^p (a, p > 0),
/// which has the closed-form inverse the bounds need.
struct PowerClassK {
    double a = 1.0;
    double p = 1.0;

    double operator()(double s) const;
    double inverse(double y) const;
    void validate() const;
};

struct LyapunovSpec {
    Expression v;        // V(t, x) >= 0
    double kappa = 0.0;  // [0, 1); 0 selects the LV <= mu(t) regime
    double fd_step_rel = 1e-5;
    double fd_step_abs = 1e-7;
    // Optional analytic derivatives; when present they bypass the FD stencil.
    std::vector<Expression> grad;
    std::vector<std::vector<Expression>> hessian;

    void validate(int dim) const;
};

struct SampleSpec {
    double t_min = 0.0;
    double t_max = 50.0;
    double radius_min = 1e-9;  // origin exclusion: V^kappa is origin-singular
    double radius_max = 2.0;
    std::int64_t n_samples = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ViolationReport {
    std::int64_t n_samples = 0;
    std::int64_t n_violations = 0;
    double worst = 0.0;  // max normalized excess over samples; clean iff <= tolerance
    double worst_t = 0.0;
    std::vector<double> worst_x;
    double tolerance = 0.0;

    bool passed() const { return n_violations == 0; }
};

struct UasfCertificate {
    std::string mu_text;
    double c = 0.0;  // c_mu > 0
    double d = 0.0;  // d_mu >= 0
    double t0 = 0.0;
    double horizon = 0.0;
    std::int64_t n_grid = 0;
    double max_residual = 0.0;  // max over grid of integral(mu) - (d - c(t-t0))
    bool verified = false;
    bool fitted = false;
    bool fit_failed = false;
};

/// Composite Simpson on n_panels panels; O(n^-4) for smooth integrands.
/// Certificate checks use >= 200 panels per unit time for kinked integrands.
double integrate_time_function(const Expression& f, double t0, double t1, std::int64_t n_panels);

/// Checks integral_{t0}^{t} mu <= d - c(t - t0) on an n_grid-point time grid
/// over [t0, horizon] with cumulative Simpson; verified iff the max residual
/// is <= 1e-6.
UasfCertificate verify_uasf(const Expression& mu, double c, double d, double t0, double horizon,
                            std::int64_t n_grid);

/// Constructive use of the UASF characterization: c from the decay slope of
/// the second half of the cumulative integral (clamped below at 1e-3), then
/// the minimal d >= 0 dominating the grid. Flagged fit-failed when the raw
/// slope shows no decay (clamp engaged) or re-verification fails.
UasfCertificate fit_uasf(const Expression& mu, double t0, double horizon, std::int64_t n_grid);

/// LV = V_t + V_x f + (1/2) Tr(g^T V_xx g), derivatives by central finite
/// differences with relative step fd_step_rel and absolute floor fd_step_abs
/// unless analytic derivatives are supplied.
double generator_value(const SdeSystem& system, const LyapunovSpec& v, double t,
                       std::span<const double> x);

/// gamma_low(|x|) <= V(t,x) <= gamma_high(|x|) pointwise; tolerance 1e-10 relative.
ViolationReport check_envelope(const LyapunovSpec& v, const PowerClassK& gamma_low,
                               const PowerClassK& gamma_high, const SampleSpec& samples, int dim);

/// LV(t,x) <= mu(t) V(t,x)^kappa (kappa = 0: LV <= mu(t));
/// tolerance 1e-7 * (1 + |mu V^kappa|).
ViolationReport check_fts_condition(const SdeSystem& system, const LyapunovSpec& v,
                                    const Expression& mu, const SampleSpec& samples);

struct InstabilityCheckReport {
    ViolationReport equality;     // |LV - mu V| <= 1e-6 (1 + |mu V|)
    ViolationReport noise_bound;  // |V_x g|^2 <= a(t) V^2 + 1e-10
    double a_integral = 0.0;      // integral of a over [t_min, t_max]
    double a_integral_bound = 0.0;
    bool integral_within_bound = false;

    bool passed() const {
        return equality.passed() && noise_bound.passed() && integral_within_bound;
    }
};

InstabilityCheckReport check_instability_conditions(const SdeSystem& system, const LyapunovSpec& v,
                                                    const Expression& mu, const Expression& a,
                                                    double a_integral_bound,
                                                    const SampleSpec& samples);

struct LinearGrowthReport {
    double estimated_H = 0.0;  // max over samples of (|f|^2 + ||g||^2) / (1 + |x|^2)
    std::optional<double> declared_H;
    ViolationReport report;  // against declared_H when given
};

LinearGrowthReport check_linear_growth(const SdeSystem& system, const SampleSpec& samples,
                                       std::optional<double> declared_H = std::nullopt);

/// gamma(|x|) <= U(t,x) and LU <= l(t) U + d_U pointwise (d_U >= 0).
ViolationReport check_lemma23(const SdeSystem& system, const LyapunovSpec& u,
                              const Expression& l_expr, double d_u, const PowerClassK& gamma,
                              const SampleSpec& samples);

/// t0 + d/c + gamma_high(|x0|)^{1-kappa} / (c (1-kappa)); at kappa = 0 this is
/// the unique-solution bound t0 + d/c + gamma_high(|x0|)/c. Requires a
/// verified certificate.
double settling_bound(const UasfCertificate& cert, double kappa, const PowerClassK& gamma_high,
                      double x0_norm, double t0);

/// delta(eps, R) = gamma_high^{-1}([eps gamma_low(R)^{1-kappa} - d(1-kappa)]^{1/(1-kappa)});
/// empty when the bracket is <= 0 (the bound is vacuous for this (eps, R, d)).
std::optional<double> stability_delta(double eps, double R, double kappa,
                                      const PowerClassK& gamma_low, const PowerClassK& gamma_high,
                                      double d_mu);

} // namespace ftslab
