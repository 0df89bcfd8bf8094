#include "ftslab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ftslab/rng.hpp"

namespace ftslab {

namespace {

constexpr double kUasfResidualTol = 1e-6;
constexpr double kFitCMin = 1e-3;
constexpr std::int64_t kPanelsPerUnitTime = 200;

double simpson(const Expression& f, double a, double b, std::int64_t n_panels) {
    const double h = (b - a) / static_cast<double>(n_panels);
    double odd = 0.0;
    double even = 0.0;
    for (std::int64_t i = 0; i < n_panels; ++i)
        odd += f.evaluate(a + (static_cast<double>(i) + 0.5) * h);
    for (std::int64_t i = 1; i < n_panels; ++i) even += f.evaluate(a + static_cast<double>(i) * h);
    return h / 6.0 * (f.evaluate(a) + f.evaluate(b) + 4.0 * odd + 2.0 * even);
}

// Cumulative Simpson values of mu at the n_grid+1 equally spaced grid points
// of [t0, t1], with >= kPanelsPerUnitTime panels per unit time inside each
// grid segment (kinked integrands such as |sin 2t| stay within budget).
std::vector<double> cumulative_integral(const Expression& mu, double t0, double t1,
                                        std::int64_t n_grid) {
    std::vector<double> result(static_cast<std::size_t>(n_grid) + 1, 0.0);
    const double seg = (t1 - t0) / static_cast<double>(n_grid);
    const auto panels = std::max<std::int64_t>(
        2, static_cast<std::int64_t>(std::ceil(static_cast<double>(kPanelsPerUnitTime) * seg)));
    double acc = 0.0;
    for (std::int64_t i = 0; i < n_grid; ++i) {
        const double a = t0 + static_cast<double>(i) * seg;
        acc += simpson(mu, a, a + seg, panels);
        result[static_cast<std::size_t>(i) + 1] = acc;
    }
    return result;
}

void require_time_only(const Expression& e, const char* what) {
    if (!e.is_time_only())
        throw std::invalid_argument(std::string(what) + " must depend on t only");
}

struct Sampler {
    RandomStream rng;
    const SampleSpec& spec;
    int dim;

    Sampler(const SampleSpec& s, int d) : rng(s.seed), spec(s), dim(d) {}

    // Uniform t, uniform radius in [radius_min, radius_max], uniform direction.
    void next(double& t, std::vector<double>& x) {
        t = rng.uniform(spec.t_min, spec.t_max);
        const double radius = rng.uniform(spec.radius_min, spec.radius_max);
        double nsq = 0.0;
        do {
            nsq = 0.0;
            for (int i = 0; i < dim; ++i) {
                x[static_cast<std::size_t>(i)] = rng.normal();
                nsq += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
            }
        } while (nsq < 1e-30);
        const double scale = radius / std::sqrt(nsq);
        for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] *= scale;
    }
};

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Accumulates the normalized excesses of one pointwise condition.
struct ViolationAccumulator {
    ViolationReport report;

    explicit ViolationAccumulator(double tolerance) { report.tolerance = tolerance; }

    void add(double excess, double t, std::span<const double> x) {
        ++report.n_samples;
        if (report.n_samples == 1 || excess > report.worst) {
            report.worst = excess;
            report.worst_t = t;
            report.worst_x.assign(x.begin(), x.end());
        }
        if (excess > report.tolerance) ++report.n_violations;
    }
};

[[noreturn]] void rethrow_with_point(const EvalError& e, double t, std::span<const double> x) {
    std::ostringstream os;
    os << e.what() << " [while evaluating at t=" << t << ", x=(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << ")]";
    throw EvalError(os.str());
}

struct GeneratorWorkspace {
    std::vector<double> f;
    std::vector<double> g;
    std::vector<double> grad;
    std::vector<double> hess;
    std::vector<double> xp;

    explicit GeneratorWorkspace(int r, int d)
        : f(static_cast<std::size_t>(r)),
          g(static_cast<std::size_t>(r * d)),
          grad(static_cast<std::size_t>(r)),
          hess(static_cast<std::size_t>(r * r)),
          xp(static_cast<std::size_t>(r)) {}
};

double fd_step(double value, const LyapunovSpec& v) {
    return std::max(v.fd_step_rel * std::abs(value), v.fd_step_abs);
}

void gradient_at(const LyapunovSpec& v, double t, std::span<const double> x,
                 GeneratorWorkspace& ws) {
    const int r = static_cast<int>(x.size());
    if (!v.grad.empty()) {
        for (int i = 0; i < r; ++i)
            ws.grad[static_cast<std::size_t>(i)] = v.grad[static_cast<std::size_t>(i)].evaluate(t, x);
        return;
    }
    std::copy(x.begin(), x.end(), ws.xp.begin());
    for (int i = 0; i < r; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        const double h = fd_step(xi, v);
        ws.xp[static_cast<std::size_t>(i)] = xi + h;
        const double up = v.v.evaluate(t, ws.xp);
        ws.xp[static_cast<std::size_t>(i)] = xi - h;
        const double dn = v.v.evaluate(t, ws.xp);
        ws.xp[static_cast<std::size_t>(i)] = xi;
        ws.grad[static_cast<std::size_t>(i)] = (up - dn) / (2.0 * h);
    }
}

void hessian_at(const LyapunovSpec& v, double t, std::span<const double> x,
                GeneratorWorkspace& ws) {
    const int r = static_cast<int>(x.size());
    if (!v.hessian.empty()) {
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
                ws.hess[static_cast<std::size_t>(i * r + j)] =
                    v.hessian[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].evaluate(t, x);
        return;
    }
    std::copy(x.begin(), x.end(), ws.xp.begin());
    const double center = v.v.evaluate(t, x);
    for (int i = 0; i < r; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        const double hi = fd_step(xi, v);
        ws.xp[static_cast<std::size_t>(i)] = xi + hi;
        const double up = v.v.evaluate(t, ws.xp);
        ws.xp[static_cast<std::size_t>(i)] = xi - hi;
        const double dn = v.v.evaluate(t, ws.xp);
        ws.xp[static_cast<std::size_t>(i)] = xi;
        ws.hess[static_cast<std::size_t>(i * r + i)] = (up - 2.0 * center + dn) / (hi * hi);
        for (int j = i + 1; j < r; ++j) {
            const double xj = x[static_cast<std::size_t>(j)];
            const double hj = fd_step(xj, v);
            double sum = 0.0;
            for (int si = -1; si <= 1; si += 2)
                for (int sj = -1; sj <= 1; sj += 2) {
                    ws.xp[static_cast<std::size_t>(i)] = xi + si * hi;
                    ws.xp[static_cast<std::size_t>(j)] = xj + sj * hj;
                    sum += si * sj * v.v.evaluate(t, ws.xp);
                }
            ws.xp[static_cast<std::size_t>(i)] = xi;
            ws.xp[static_cast<std::size_t>(j)] = xj;
            const double value = sum / (4.0 * hi * hj);
            ws.hess[static_cast<std::size_t>(i * r + j)] = value;
            ws.hess[static_cast<std::size_t>(j * r + i)] = value;
        }
    }
}

double time_derivative_at(const LyapunovSpec& v, double t, std::span<const double> x) {
    if (!v.v.uses_time()) return 0.0;
    const double h = fd_step(t, v);
    return (v.v.evaluate(t + h, x) - v.v.evaluate(t - h, x)) / (2.0 * h);
}

double generator_value_ws(const SdeSystem& system, const LyapunovSpec& v, double t,
                          std::span<const double> x, GeneratorWorkspace& ws) {
    const int r = system.dim;
    const int d = system.noise_dim;
    system.drift_at(t, x, ws.f);
    system.diffusion_at(t, x, ws.g);
    gradient_at(v, t, x, ws);
    hessian_at(v, t, x, ws);

    double lv = time_derivative_at(v, t, x);
    for (int i = 0; i < r; ++i)
        lv += ws.grad[static_cast<std::size_t>(i)] * ws.f[static_cast<std::size_t>(i)];
    for (int k = 0; k < d; ++k) {
        // column k of g against the Hessian: g_k^T V_xx g_k
        double quad = 0.0;
        for (int i = 0; i < r; ++i) {
            double row = 0.0;
            for (int j = 0; j < r; ++j)
                row += ws.hess[static_cast<std::size_t>(i * r + j)] *
                       ws.g[static_cast<std::size_t>(j * d + k)];
            quad += ws.g[static_cast<std::size_t>(i * d + k)] * row;
        }
        lv += 0.5 * quad;
    }
    return lv;
}

} // namespace

double PowerClassK::operator()(double s) const { return a * std::pow(s, p); }

double PowerClassK::inverse(double y) const { return std::pow(y / a, 1.0 / p); }

void PowerClassK::validate() const {
    if (!(a > 0.0) || !(p > 0.0))
        throw std::invalid_argument("class-K function requires a > 0 and p > 0");
}

void LyapunovSpec::validate(int dim) const {
    if (v.empty()) throw std::invalid_argument("lyapunov.v is required");
    if (!(kappa >= 0.0 && kappa < 1.0)) throw std::invalid_argument("kappa must lie in [0, 1)");
    if (!(fd_step_rel > 0.0) || !(fd_step_abs > 0.0))
        throw std::invalid_argument("finite-difference steps must be > 0");
    if (v.max_state_index() > dim)
        throw std::invalid_argument("lyapunov.v references a coordinate beyond the system dimension");
    if (!grad.empty() && static_cast<int>(grad.size()) != dim)
        throw std::invalid_argument("lyapunov.grad must have one entry per coordinate");
    if (!hessian.empty()) {
        if (static_cast<int>(hessian.size()) != dim)
            throw std::invalid_argument("lyapunov.hessian must be dim x dim");
        for (const auto& row : hessian)
            if (static_cast<int>(row.size()) != dim)
                throw std::invalid_argument("lyapunov.hessian must be dim x dim");
    }
}

void SampleSpec::validate() const {
    if (!(t_max >= t_min)) throw std::invalid_argument("sample.t_max must be >= sample.t_min");
    if (!(radius_min > 0.0)) throw std::invalid_argument("sample.origin_exclusion_radius must be > 0");
    if (!(radius_max > radius_min)) throw std::invalid_argument("sample.x_max must exceed the origin exclusion radius");
    if (n_samples < 1) throw std::invalid_argument("sample.n_samples must be >= 1");
}

double integrate_time_function(const Expression& f, double t0, double t1, std::int64_t n_panels) {
    require_time_only(f, "integrand");
    if (n_panels < 1) throw std::invalid_argument("integrate_time_function: n_panels must be >= 1");
    if (!(t1 >= t0)) throw std::invalid_argument("integrate_time_function: t1 must be >= t0");
    if (t1 == t0) return 0.0;
    return simpson(f, t0, t1, n_panels);
}

UasfCertificate verify_uasf(const Expression& mu, double c, double d, double t0, double horizon,
                            std::int64_t n_grid) {
    require_time_only(mu, "mu");
    if (!(c > 0.0)) throw std::invalid_argument("verify_uasf: c must be > 0");
    if (!(d >= 0.0)) throw std::invalid_argument("verify_uasf: d must be >= 0");
    if (!(horizon > t0)) throw std::invalid_argument("verify_uasf: horizon must exceed t0");
    if (n_grid < 2) throw std::invalid_argument("verify_uasf: n_grid must be >= 2");

    UasfCertificate cert;
    cert.mu_text = mu.to_string();
    cert.c = c;
    cert.d = d;
    cert.t0 = t0;
    cert.horizon = horizon;
    cert.n_grid = n_grid;

    const auto integral = cumulative_integral(mu, t0, horizon, n_grid);
    const double seg = (horizon - t0) / static_cast<double>(n_grid);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < integral.size(); ++i) {
        const double dt = static_cast<double>(i) * seg;
        worst = std::max(worst, integral[i] - (d - c * dt));
    }
    cert.max_residual = worst;
    cert.verified = worst <= kUasfResidualTol;
    return cert;
}

UasfCertificate fit_uasf(const Expression& mu, double t0, double horizon, std::int64_t n_grid) {
    require_time_only(mu, "mu");
    if (!(horizon > t0)) throw std::invalid_argument("fit_uasf: horizon must exceed t0");
    if (n_grid < 4) throw std::invalid_argument("fit_uasf: n_grid must be >= 4");

    const auto integral = cumulative_integral(mu, t0, horizon, n_grid);
    const double seg = (horizon - t0) / static_cast<double>(n_grid);
    const std::size_t mid = static_cast<std::size_t>(n_grid) / 2;
    const double t_mid = t0 + static_cast<double>(mid) * seg;

    // Decay slope of the second half; a genuine UASF integral trends like
    // d - c(t - t0), so this estimates c away from the transient.
    const double c_raw = -(integral.back() - integral[mid]) / (horizon - t_mid);
    const double c = std::max(kFitCMin, c_raw);

    double d = 0.0;
    for (std::size_t i = 0; i < integral.size(); ++i)
        d = std::max(d, integral[i] + c * (static_cast<double>(i) * seg));

    UasfCertificate cert = verify_uasf(mu, c, d, t0, horizon, n_grid);
    cert.fitted = true;
    cert.fit_failed = (c_raw < kFitCMin) || !cert.verified;
    if (cert.fit_failed) cert.verified = false;
    return cert;
}

double generator_value(const SdeSystem& system, const LyapunovSpec& v, double t,
                       std::span<const double> x) {
    if (static_cast<int>(x.size()) != system.dim)
        throw std::invalid_argument("generator_value: x dimension mismatch");
    GeneratorWorkspace ws(system.dim, system.noise_dim);
    try {
        return generator_value_ws(system, v, t, x, ws);
    } catch (const EvalError& e) {
        rethrow_with_point(e, t, x);
    }
}

ViolationReport check_envelope(const LyapunovSpec& v, const PowerClassK& gamma_low,
                               const PowerClassK& gamma_high, const SampleSpec& samples, int dim) {
    samples.validate();
    gamma_low.validate();
    gamma_high.validate();
    Sampler sampler(samples, dim);
    ViolationAccumulator acc(1e-10);
    std::vector<double> x(static_cast<std::size_t>(dim));
    double t = 0.0;
    for (std::int64_t i = 0; i < samples.n_samples; ++i) {
        sampler.next(t, x);
        const double value = v.v.evaluate(t, x);
        const double nrm = norm2(x);
        const double scale = 1.0 + std::abs(value);
        const double excess =
            std::max(gamma_low(nrm) - value, value - gamma_high(nrm)) / scale;
        acc.add(excess, t, x);
    }
    return acc.report;
}

ViolationReport check_fts_condition(const SdeSystem& system, const LyapunovSpec& v,
                                    const Expression& mu, const SampleSpec& samples) {
    samples.validate();
    require_time_only(mu, "mu");
    SampleSpec spec = samples;
    spec.radius_min = std::max(spec.radius_min, 1e-9);
    Sampler sampler(spec, system.dim);
    GeneratorWorkspace ws(system.dim, system.noise_dim);
    ViolationAccumulator acc(1e-7);
    std::vector<double> x(static_cast<std::size_t>(system.dim));
    double t = 0.0;
    for (std::int64_t i = 0; i < spec.n_samples; ++i) {
        sampler.next(t, x);
        try {
            const double lv = generator_value_ws(system, v, t, x, ws);
            const double value = v.v.evaluate(t, x);
            if (value < 0.0) {
                acc.add(1.0 + std::abs(value), t, x);  // V must be nonnegative
                continue;
            }
            const double rhs =
                v.kappa == 0.0 ? mu.evaluate(t) : mu.evaluate(t) * std::pow(value, v.kappa);
            acc.add((lv - rhs) / (1.0 + std::abs(rhs)), t, x);
        } catch (const EvalError& e) {
            rethrow_with_point(e, t, x);
        }
    }
    return acc.report;
}

InstabilityCheckReport check_instability_conditions(const SdeSystem& system, const LyapunovSpec& v,
                                                    const Expression& mu, const Expression& a,
                                                    double a_integral_bound,
                                                    const SampleSpec& samples) {
    samples.validate();
    require_time_only(mu, "mu");
    require_time_only(a, "a");
    SampleSpec spec = samples;
    spec.radius_min = std::max(spec.radius_min, 1e-9);
    Sampler sampler(spec, system.dim);
    GeneratorWorkspace ws(system.dim, system.noise_dim);

    InstabilityCheckReport out;
    ViolationAccumulator equality(1e-6);
    ViolationAccumulator noise(1e-10);

    std::vector<double> x(static_cast<std::size_t>(system.dim));
    double t = 0.0;
    for (std::int64_t i = 0; i < spec.n_samples; ++i) {
        sampler.next(t, x);
        try {
            const double lv = generator_value_ws(system, v, t, x, ws);
            const double value = v.v.evaluate(t, x);
            const double mu_v = mu.evaluate(t) * value;
            equality.add(std::abs(lv - mu_v) / (1.0 + std::abs(mu_v)), t, x);

            // |V_x g|^2 against a(t) V^2, absolute tolerance.
            system.diffusion_at(t, x, ws.g);
            gradient_at(v, t, x, ws);
            double vxg_sq = 0.0;
            for (int k = 0; k < system.noise_dim; ++k) {
                double dot = 0.0;
                for (int j = 0; j < system.dim; ++j)
                    dot += ws.grad[static_cast<std::size_t>(j)] *
                           ws.g[static_cast<std::size_t>(j * system.noise_dim + k)];
                vxg_sq += dot * dot;
            }
            noise.add(vxg_sq - a.evaluate(t) * value * value, t, x);
        } catch (const EvalError& e) {
            rethrow_with_point(e, t, x);
        }
    }

    out.equality = equality.report;
    out.noise_bound = noise.report;
    const std::int64_t panels = std::max<std::int64_t>(
        64, static_cast<std::int64_t>(std::ceil(200.0 * (spec.t_max - spec.t_min))));
    out.a_integral = integrate_time_function(a, spec.t_min, spec.t_max, panels);
    out.a_integral_bound = a_integral_bound;
    out.integral_within_bound = out.a_integral <= a_integral_bound + 1e-8;
    return out;
}

LinearGrowthReport check_linear_growth(const SdeSystem& system, const SampleSpec& samples,
                                       std::optional<double> declared_H) {
    samples.validate();
    Sampler sampler(samples, system.dim);
    LinearGrowthReport out;
    out.declared_H = declared_H;
    ViolationAccumulator acc(1e-9);
    std::vector<double> x(static_cast<std::size_t>(system.dim));
    std::vector<double> f(static_cast<std::size_t>(system.dim));
    std::vector<double> g(static_cast<std::size_t>(system.dim * system.noise_dim));
    double t = 0.0;
    for (std::int64_t i = 0; i < samples.n_samples; ++i) {
        sampler.next(t, x);
        try {
            system.drift_at(t, x, f);
            system.diffusion_at(t, x, g);
        } catch (const EvalError& e) {
            rethrow_with_point(e, t, x);
        }
        double fsq = 0.0;
        for (double value : f) fsq += value * value;
        double gsq = 0.0;  // squared Frobenius norm
        for (double value : g) gsq += value * value;
        double xsq = 0.0;
        for (double value : x) xsq += value * value;
        const double ratio = (fsq + gsq) / (1.0 + xsq);
        out.estimated_H = std::max(out.estimated_H, ratio);
        const double excess =
            declared_H ? (ratio - *declared_H) / (1.0 + *declared_H)
                       : -1.0;  // nothing declared: report only the estimate
        acc.add(excess, t, x);
    }
    out.report = acc.report;
    return out;
}

ViolationReport check_lemma23(const SdeSystem& system, const LyapunovSpec& u,
                              const Expression& l_expr, double d_u, const PowerClassK& gamma,
                              const SampleSpec& samples) {
    samples.validate();
    gamma.validate();
    require_time_only(l_expr, "l");
    if (!(d_u >= 0.0)) throw std::invalid_argument("check_lemma23: d_U must be >= 0");
    Sampler sampler(samples, system.dim);
    GeneratorWorkspace ws(system.dim, system.noise_dim);
    ViolationAccumulator acc(1e-7);
    std::vector<double> x(static_cast<std::size_t>(system.dim));
    double t = 0.0;
    for (std::int64_t i = 0; i < samples.n_samples; ++i) {
        sampler.next(t, x);
        try {
            const double value = u.v.evaluate(t, x);
            const double lu = generator_value_ws(system, u, t, x, ws);
            const double rhs = l_expr.evaluate(t) * value + d_u;
            const double lower_gap = (gamma(norm2(x)) - value) / (1.0 + std::abs(value));
            const double upper_gap = (lu - rhs) / (1.0 + std::abs(rhs));
            acc.add(std::max(lower_gap, upper_gap), t, x);
        } catch (const EvalError& e) {
            rethrow_with_point(e, t, x);
        }
    }
    return acc.report;
}

double settling_bound(const UasfCertificate& cert, double kappa, const PowerClassK& gamma_high,
                      double x0_norm, double t0) {
    if (!cert.verified) throw std::invalid_argument("settling_bound: certificate is not verified");
    if (!(kappa >= 0.0 && kappa < 1.0)) throw std::invalid_argument("settling_bound: kappa must lie in [0, 1)");
    gamma_high.validate();
    if (!(x0_norm >= 0.0)) throw std::invalid_argument("settling_bound: |x0| must be >= 0");
    return t0 + cert.d / cert.c +
           std::pow(gamma_high(x0_norm), 1.0 - kappa) / (cert.c * (1.0 - kappa));
}

std::optional<double> stability_delta(double eps, double R, double kappa,
                                      const PowerClassK& gamma_low, const PowerClassK& gamma_high,
                                      double d_mu) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("stability_delta: eps must lie in (0, 1)");
    if (!(R > 0.0)) throw std::invalid_argument("stability_delta: R must be > 0");
    if (!(kappa >= 0.0 && kappa < 1.0)) throw std::invalid_argument("stability_delta: kappa must lie in [0, 1)");
    gamma_low.validate();
    gamma_high.validate();
    const double bracket = eps * std::pow(gamma_low(R), 1.0 - kappa) - d_mu * (1.0 - kappa);
    if (!(bracket > 0.0)) return std::nullopt;
    return gamma_high.inverse(std::pow(bracket, 1.0 / (1.0 - kappa)));
}

} // namespace ftslab
