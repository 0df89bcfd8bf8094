#pragma once

// Ito systems dx = f(t,x)dt + g(t,x)dW with coefficients vanishing at the
// origin, the built-in example systems, and the backstepping gain chain for
// the closed-loop third-order example.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ftslab/expr.hpp"

namespace ftslab {

struct ControllerGains {
    int l = 0;
    double c1 = 0.0;
    double c2 = 0.0;
    double lambda = 0.0;  // = beta1
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double h3 = 0.0;
    double d1 = 0.0;  // = c1/2 by the h-choices
    double d2 = 0.0;
    double d1_tilde = 0.0;
    double d2_tilde = 0.0;
};

/// Gain chain for the third-order closed loop. Requires l >= 2, c1 > 0,
/// c2 > 0, and asserts the engineered identity
/// d1_tilde + 2^{1-lambda} h3 / (1+lambda) = c1/2 to 1e-10.
ControllerGains controller_gains(int l, double c1, double c2);

/// State feedback u(x1, x2) = -(d2 + c2/2) * spow(z2, 2*lambda - 1) with
/// z1 = x1, alpha = -c1*spow(z1, lambda), z2 = spow(x2, 1/lambda) - spow(alpha, 1/lambda).
double controller_u(const ControllerGains& gains, double x1, double x2);

struct SdeSystem {
    std::string name;
    int dim = 0;        // r
    int noise_dim = 0;  // d
    std::vector<Expression> drift;                   // length r
    std::vector<std::vector<Expression>> diffusion;  // r rows of d columns
    bool assumed_unique = false;
    std::optional<ControllerGains> gains;  // populated for the closed-loop builtin

    void drift_at(double t, std::span<const double> x, std::span<double> out) const;
    /// Row-major r x d matrix into out.
    void diffusion_at(double t, std::span<const double> x, std::span<double> out) const;

    /// Shape and variable-range checks, plus a numeric test that
    /// f(t,0) = 0 and g(t,0) = 0 at 100 sampled times (tolerance 1e-12).
    void validate() const;
};

// The constructed instability example uses mu ≡ kInstabilityMu and
// s(t) = e^{-t}, so V = x^2 gives LV = mu V and |V_x g|^2 = 4 e^{-2t} V^2.
inline constexpr double kInstabilityMu = -0.05;

/// Built-in systems: example1, example2, example3 (needs params l, c1, c2),
/// instability1. Throws std::invalid_argument on unknown names or bad params.
SdeSystem builtin_system(const std::string& name, const std::map<std::string, double>& params = {});

} // namespace ftslab
