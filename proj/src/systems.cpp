#include "ftslab/systems.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ftslab/rng.hpp"

namespace ftslab {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string rational(long p, long q) {
    return "(" + std::to_string(p) + "/" + std::to_string(q) + ")";
}

Expression expr(const std::string& text) { return Expression::parse(text); }

} // namespace

ControllerGains controller_gains(int l, double c1, double c2) {
    if (l < 2) throw std::invalid_argument("controller_gains: l must be an integer >= 2");
    if (!(c1 > 0.0)) throw std::invalid_argument("controller_gains: c1 must be > 0");
    if (!(c2 > 0.0)) throw std::invalid_argument("controller_gains: c2 must be > 0");

    ControllerGains g;
    g.l = l;
    g.c1 = c1;
    g.c2 = c2;
    g.beta1 = (2.0 * l - 1.0) / (2.0 * l + 1.0);
    g.beta2 = (2.0 * l) / (2.0 * l + 1.0);
    g.beta3 = (2.0 * l - 2.0) / (2.0 * l - 1.0);
    g.lambda = g.beta1;
    const double lam = g.lambda;

    g.h1 = (1.0 + lam) * std::pow(2.0, lam - 1.0) * std::pow(c1, -1.0 / lam) /
           (6.0 * lam * (2.0 - lam));
    g.h2 = (1.0 + lam) / (12.0 * (2.0 - lam) * c1);
    g.h3 = std::pow(2.0, lam) * c1 * (1.0 + lam) / 12.0;

    g.d2_tilde = (2.0 - lam) * std::pow(2.0, 1.0 - lam) * std::pow(c1, 1.0 + 1.0 / lam) *
                     std::pow(g.h1, -lam) / (1.0 + lam) +
                 (2.0 - lam) * std::pow(c1, 1.0 / lam) * std::pow(2.0, 2.0 * (1.0 - lam)) +
                 (1.0 - lam) * (2.0 - lam) * c1 * c1 * std::pow(g.h2, -2.0 * lam / (1.0 - lam)) /
                     (lam * (1.0 + lam)) +
                 (2.0 - lam) / lam;
    g.d1_tilde = std::pow(2.0, 1.0 - lam) * (2.0 - lam) * std::pow(c1, 1.0 + 1.0 / lam) * g.h1 *
                     lam / (1.0 + lam) +
                 2.0 * (2.0 - lam) * c1 * c1 * g.h2 / (1.0 + lam);
    g.d2 = g.d2_tilde + std::pow(2.0, 1.0 - lam) * lam * std::pow(g.h3, -1.0 / lam) / (1.0 + lam);
    g.d1 = 0.5 * c1;

    // The h-choices are engineered so that d1_tilde + 2^{1-lam} h3/(1+lam) = c1/2.
    const double d1_check = g.d1_tilde + std::pow(2.0, 1.0 - lam) * g.h3 / (1.0 + lam);
    if (std::abs(d1_check - 0.5 * c1) > 1e-10)
        throw std::logic_error("controller_gains: gain identity d1 = c1/2 violated");
    return g;
}

double controller_u(const ControllerGains& g, double x1, double x2) {
    const double z1 = x1;
    const double alpha = -g.c1 * signed_pow(z1, g.lambda);
    const double z2 = signed_pow(x2, 1.0 / g.lambda) - signed_pow(alpha, 1.0 / g.lambda);
    return -(g.d2 + 0.5 * g.c2) * signed_pow(z2, 2.0 * g.lambda - 1.0);
}

void SdeSystem::drift_at(double t, std::span<const double> x, std::span<double> out) const {
    for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i)] = drift[static_cast<std::size_t>(i)].evaluate(t, x);
}

void SdeSystem::diffusion_at(double t, std::span<const double> x, std::span<double> out) const {
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < noise_dim; ++j)
            out[static_cast<std::size_t>(i * noise_dim + j)] =
                diffusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].evaluate(t, x);
}

void SdeSystem::validate() const {
    if (dim < 1) throw std::invalid_argument("system '" + name + "': dimension must be >= 1");
    if (noise_dim < 1) throw std::invalid_argument("system '" + name + "': noise dimension must be >= 1");
    if (static_cast<int>(drift.size()) != dim)
        throw std::invalid_argument("system '" + name + "': drift length != dimension");
    if (static_cast<int>(diffusion.size()) != dim)
        throw std::invalid_argument("system '" + name + "': diffusion row count != dimension");
    for (const auto& row : diffusion)
        if (static_cast<int>(row.size()) != noise_dim)
            throw std::invalid_argument("system '" + name + "': diffusion column count != noise dimension");
    for (const auto& e : drift)
        if (e.max_state_index() > dim)
            throw std::invalid_argument("system '" + name + "': drift references coordinate beyond dimension");
    for (const auto& row : diffusion)
        for (const auto& e : row)
            if (e.max_state_index() > dim)
                throw std::invalid_argument("system '" + name + "': diffusion references coordinate beyond dimension");

    // Coefficients must vanish at the origin; the origin is the absorbing state.
    const std::vector<double> zero(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> f(static_cast<std::size_t>(dim));
    std::vector<double> g(static_cast<std::size_t>(dim * noise_dim));
    RandomStream rng(0x0f0e0d0c0b0a0908ull);
    for (int k = 0; k < 100; ++k) {
        const double t = rng.uniform(0.0, 100.0);
        drift_at(t, zero, f);
        diffusion_at(t, zero, g);
        for (double v : f)
            if (std::abs(v) > 1e-12)
                throw std::invalid_argument("system '" + name + "': drift does not vanish at the origin");
        for (double v : g)
            if (std::abs(v) > 1e-12)
                throw std::invalid_argument("system '" + name + "': diffusion does not vanish at the origin");
    }
}

SdeSystem builtin_system(const std::string& name, const std::map<std::string, double>& params) {
    SdeSystem sys;
    sys.name = name;

    if (name == "example1") {
        sys.dim = 1;
        sys.noise_dim = 1;
        sys.assumed_unique = false;
        sys.drift.push_back(expr("0.5*(2/(1+t) - abs(sin(2*t)))*spow(x1, 1/3) - 0.5*x1"));
        sys.diffusion = {{expr("x1*cos(x1)")}};
    } else if (name == "example2") {
        sys.dim = 2;
        sys.noise_dim = 2;
        sys.assumed_unique = false;
        sys.drift.push_back(expr("-x1 + (t*sin(t)/(1+t) - 0.5)*spow(x1, 4/5)"));
        sys.drift.push_back(expr("-x2 + (t*sin(t)/(1+t) - 0.5)*spow(x2, 4/5)"));
        sys.diffusion = {{expr("sqrt(2)*x2*cos(x1)"), expr("0")},
                         {expr("0"), expr("sqrt(2)*x1*sin(x2)")}};
    } else if (name == "example3") {
        auto need = [&](const char* key) {
            const auto it = params.find(key);
            if (it == params.end())
                throw std::invalid_argument("example3 requires parameter '" + std::string(key) + "'");
            return it->second;
        };
        const double l_raw = need("l");
        const int l = static_cast<int>(l_raw);
        if (static_cast<double>(l) != l_raw || l < 2)
            throw std::invalid_argument("example3: l must be an integer >= 2");
        const ControllerGains g = controller_gains(l, need("c1"), need("c2"));

        // State layout: x1 = chi, x2/x3 = the double integrator driven by u.
        // Exponents are exact rationals in l; the gains enter as literals.
        const std::string beta1 = rational(2L * l - 1, 2L * l + 1);
        const std::string beta2 = rational(2L * l, 2L * l + 1);
        const std::string beta3 = rational(2L * l - 2, 2L * l - 1);
        const std::string inv_lambda = rational(2L * l + 1, 2L * l - 1);
        const std::string two_lambda_m1 = rational(2L * l - 3, 2L * l + 1);

        const std::string z2 = "(spow(x3, " + inv_lambda + ") - spow(-" + num(g.c1) +
                               "*spow(x2, " + beta1 + "), " + inv_lambda + "))";
        const std::string u = "-" + num(g.d2 + 0.5 * g.c2) + "*spow(" + z2 + ", " + two_lambda_m1 + ")";

        sys.dim = 3;
        sys.noise_dim = 2;
        sys.assumed_unique = true;
        sys.gains = g;
        sys.drift.push_back(expr("0.5*(t*cos(t)/(1+t) - 1.5)*spow(x1, " + beta1 + ")"));
        sys.drift.push_back(expr("x3"));
        sys.drift.push_back(expr(u));
        sys.diffusion = {{expr("cos(x2)*spow(x1, " + beta2 + ")"), expr("0")},
                         {expr("0"), expr("0")},
                         {expr("0"), expr("spow(x3, " + beta3 + ")*sin(x1)")}};
    } else if (name == "instability1") {
        sys.dim = 1;
        sys.noise_dim = 1;
        sys.assumed_unique = true;
        sys.drift.push_back(expr("0.5*(" + num(kInstabilityMu) + " - exp(-2*t))*x1"));
        sys.diffusion = {{expr("exp(-t)*x1")}};
    } else {
        throw std::invalid_argument("unknown built-in system '" + name + "'");
    }

    sys.validate();
    return sys;
}

} // namespace ftslab
