#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ftslab/certify.hpp"
#include "ftslab/rng.hpp"
#include "ftslab/systems.hpp"

using namespace ftslab;

TEST_CASE("built-in systems vanish at the origin") {
    const std::vector<SdeSystem> systems = {
        builtin_system("example1"),
        builtin_system("example2"),
        builtin_system("example3", {{"l", 4}, {"c1", 0.3}, {"c2", 0.3}}),
        builtin_system("instability1"),
    };
    RandomStream rng(5);
    for (const auto& sys : systems) {
        const std::vector<double> zero(static_cast<std::size_t>(sys.dim), 0.0);
        std::vector<double> f(static_cast<std::size_t>(sys.dim));
        std::vector<double> g(static_cast<std::size_t>(sys.dim * sys.noise_dim));
        for (int k = 0; k < 100; ++k) {
            const double t = rng.uniform(0.0, 100.0);
            sys.drift_at(t, zero, f);
            sys.diffusion_at(t, zero, g);
            for (double v : f) CHECK(std::abs(v) <= 1e-12);
            for (double v : g) CHECK(std::abs(v) <= 1e-12);
        }
    }
}

TEST_CASE("example1 drift and diffusion values") {
    const auto sys = builtin_system("example1");
    CHECK(sys.dim == 1);
    CHECK(sys.noise_dim == 1);
    std::vector<double> f(1);
    sys.drift_at(0.0, std::vector<double>{1.0}, f);
    CHECK(f[0] == doctest::Approx(0.5).epsilon(1e-15));  // 0.5*2*1 - 0.5

    std::vector<double> g(1);
    sys.diffusion_at(0.0, std::vector<double>{2.0}, g);
    CHECK(g[0] == doctest::Approx(2.0 * std::cos(2.0)).epsilon(1e-15));
}

TEST_CASE("example2 drift vanishes at the origin and has diagonal noise") {
    const auto sys = builtin_system("example2");
    CHECK(sys.dim == 2);
    CHECK(sys.noise_dim == 2);
    std::vector<double> f(2);
    sys.drift_at(0.0, std::vector<double>{0.0, 0.0}, f);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
    std::vector<double> g(4);
    sys.diffusion_at(1.0, std::vector<double>{0.3, -0.4}, g);
    CHECK(g[0] == doctest::Approx(std::sqrt(2.0) * -0.4 * std::cos(0.3)).epsilon(1e-15));
    CHECK(g[1] == 0.0);
    CHECK(g[2] == 0.0);
    CHECK(g[3] == doctest::Approx(std::sqrt(2.0) * 0.3 * std::sin(-0.4)).epsilon(1e-15));
}

TEST_CASE("example1 linear growth with H = 9/4") {
    SampleSpec spec;
    spec.t_min = 0.0;
    spec.t_max = 100.0;
    spec.radius_min = 1e-6;
    spec.radius_max = 10.0;
    spec.n_samples = 100000;
    spec.seed = 31;
    const auto result = check_linear_growth(builtin_system("example1"), spec, 2.25);
    CHECK(result.report.n_violations == 0);
    CHECK(result.estimated_H <= 2.25 + 1e-9);
    CHECK(result.estimated_H > 1.0);
}

TEST_CASE("controller gains for l=4, c1=0.3 match the high-precision oracle") {
    const auto g = controller_gains(4, 0.3, 0.3);
    CHECK(g.lambda == 7.0 / 9.0);
    CHECK(g.beta2 == 8.0 / 9.0);
    CHECK(g.beta3 == doctest::Approx(6.0 / 7.0).epsilon(1e-16));
    CHECK(g.d1 == 0.15);  // exactly c1/2
    CHECK(g.h1 == doctest::Approx(1.2563123655808905).epsilon(1e-12));
    CHECK(g.h2 == doctest::Approx(0.4040404040404040).epsilon(1e-12));
    CHECK(g.h3 == doctest::Approx(0.0761994651424954).epsilon(1e-12));
    CHECK(g.d1_tilde == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(g.d2_tilde == doctest::Approx(12.025123955591572).epsilon(1e-12));
    CHECK(g.d2 == doctest::Approx(26.000515901805652).epsilon(1e-12));
}

TEST_CASE("gain identity holds across random (l, c1)") {
    RandomStream rng(23);
    for (int i = 0; i < 50; ++i) {
        const int l = 2 + static_cast<int>(rng.next_u64() % 9);
        const double c1 = rng.uniform(0.05, 5.0);
        const auto g = controller_gains(l, c1, 1.0);  // throws if the identity breaks
        CHECK(g.d1 == 0.5 * c1);
        CHECK(g.beta1 > 0.5);
        CHECK(g.beta1 < 1.0);
        CHECK(g.beta2 > 0.5);
        CHECK(g.beta2 < 1.0);
        CHECK(g.beta3 > 0.5);
        CHECK(g.beta3 < 1.0);
        CHECK(std::abs(g.d1_tilde + std::pow(2.0, 1.0 - g.lambda) * g.h3 / (1.0 + g.lambda) -
                       0.5 * c1) <= 1e-10);
    }
}

TEST_CASE("controller_u") {
    const auto g = controller_gains(4, 0.3, 0.3);
    CHECK(controller_u(g, 0.0, 0.0) == 0.0);
    CHECK(controller_u(g, 0.1, -0.2) == doctest::Approx(7.476824012882413).epsilon(1e-12));

    RandomStream rng(71);
    for (int i = 0; i < 100; ++i) {
        const double a = rng.uniform(-2.0, 2.0);
        const double b = rng.uniform(-2.0, 2.0);
        CHECK(controller_u(g, -a, -b) == -controller_u(g, a, b));  // odd symmetry, exact
    }

    // Continuity at z2 = 0 (2*lambda - 1 > 0 for l >= 2): u vanishes as x2
    // approaches the stabilizing function.
    const double x1 = 1.0;
    const double alpha = -g.c1 * signed_pow(x1, g.lambda);
    CHECK(std::abs(controller_u(g, x1, alpha)) <= 1e-12);
    double prev = std::abs(controller_u(g, x1, alpha + 1e-2));
    for (double offset : {1e-4, 1e-6, 1e-8, 1e-10}) {
        const double cur = std::abs(controller_u(g, x1, alpha + offset));
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("example3 drift embeds the controller") {
    const auto sys = builtin_system("example3", {{"l", 4}, {"c1", 0.3}, {"c2", 0.3}});
    CHECK(sys.dim == 3);
    CHECK(sys.noise_dim == 2);
    REQUIRE(sys.gains.has_value());

    std::vector<double> f(3);
    const std::vector<double> x = {0.2, 0.1, -0.2};
    sys.drift_at(0.0, x, f);
    CHECK(f[1] == -0.2);  // the second coordinate integrates the third
    CHECK(f[2] == doctest::Approx(controller_u(*sys.gains, 0.1, -0.2)).epsilon(1e-12));
    // chi drift: phi(0) * spow(0.2, 7/9) with phi(0) = 0.5*(0 - 1.5)
    CHECK(f[0] == doctest::Approx(-0.75 * std::pow(0.2, 7.0 / 9.0)).epsilon(1e-12));
}

TEST_CASE("instability1 matches its closed-form construction") {
    const auto sys = builtin_system("instability1");
    std::vector<double> f(1);
    std::vector<double> g(1);
    const std::vector<double> x = {0.5};
    sys.drift_at(1.0, x, f);
    sys.diffusion_at(1.0, x, g);
    CHECK(f[0] == doctest::Approx(0.5 * (kInstabilityMu - std::exp(-2.0)) * 0.5).epsilon(1e-14));
    CHECK(g[0] == doctest::Approx(std::exp(-1.0) * 0.5).epsilon(1e-14));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(builtin_system("nope"), std::invalid_argument);
    CHECK_THROWS_AS(builtin_system("example3"), std::invalid_argument);  // params required
    CHECK_THROWS_AS(builtin_system("example3", {{"l", 1}, {"c1", 0.3}, {"c2", 0.3}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(builtin_system("example3", {{"l", 4}, {"c1", -1.0}, {"c2", 0.3}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(builtin_system("example3", {{"l", 4}, {"c1", 0.3}, {"c2", 0.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(controller_gains(1, 0.3, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(controller_gains(4, 0.0, 0.3), std::invalid_argument);
}

TEST_CASE("custom system validation rejects bad shapes") {
    SdeSystem sys;
    sys.name = "bad";
    sys.dim = 2;
    sys.noise_dim = 1;
    sys.drift.push_back(Expression::parse("-x1"));
    CHECK_THROWS_AS(sys.validate(), std::invalid_argument);  // drift length mismatch

    SdeSystem nonvanishing;
    nonvanishing.name = "offset";
    nonvanishing.dim = 1;
    nonvanishing.noise_dim = 1;
    nonvanishing.drift.push_back(Expression::parse("1 + x1"));
    nonvanishing.diffusion = {{Expression::parse("0")}};
    CHECK_THROWS_AS(nonvanishing.validate(), std::invalid_argument);
}
