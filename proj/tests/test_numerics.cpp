#include <doctest.h>

#include <elslab/numerics.hpp>

#include <cmath>
#include <vector>

#include "support.hpp"

using namespace elslab;
using testutil::close_abs;
using testutil::close_rel;

TEST_CASE("finite-interval quadrature matches closed forms") {
    const auto sq = [](double x) { return x * x; };
    auto r = num::integrate(sq, 0.0, 1.0);
    CHECK(close_abs(r.value, 1.0 / 3.0, 1e-14));
    CHECK(r.converged);
    CHECK(std::fabs(r.value - 1.0 / 3.0) <= std::max(r.abs_err, 1e-14));

    r = num::integrate([](double x) { return std::sin(x); }, 0.0,
                       std::acos(-1.0));
    CHECK(close_abs(r.value, 2.0, 1e-12));

    // Endpoint singularity handled by adaptive refinement.
    r = num::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                       1e-10);
    CHECK(close_rel(r.value, 2.0, 1e-8));
}

TEST_CASE("improper integrals: value, tail fit, divergence detection") {
    auto r = num::integrate_to_infinity(
        [](double s) { return 1.0 / (s * s); }, 1.0);
    REQUIRE(r.kind == num::Convergence::Finite);
    CHECK(close_rel(r.value, 1.0, 1e-7));
    CHECK(close_abs(r.tail.exponent, 2.0, 1e-2));

    r = num::integrate_to_infinity(
        [](double s) { return std::pow(s, -1.5); }, 1.0);
    REQUIRE(r.kind == num::Convergence::Finite);
    CHECK(close_rel(r.value, 2.0, 1e-7));

    r = num::integrate_to_infinity([](double s) { return 1.0 / s; }, 1.0);
    CHECK(r.kind == num::Convergence::Divergent);
}

TEST_CASE("monotone inversion finds bracketed roots") {
    const double root =
        num::invert_monotone([](double x) { return std::cos(x); }, 0.0, 2.0);
    CHECK(close_rel(root, std::acos(-1.0) / 2.0, 1e-13));

    const double cube =
        num::invert_monotone([](double x) { return x * x * x - 8.0; }, 0.0,
                             10.0);
    CHECK(close_rel(cube, 2.0, 1e-13));
}

TEST_CASE("least-squares slope recovers an exact line") {
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
        x.push_back(0.3 * i - 1.0);
        y.push_back(3.0 * x.back() - 1.0);
    }
    CHECK(close_abs(num::fit_slope(x, y), 3.0, 1e-12));
}

TEST_CASE("shape-preserving interpolation stays monotone") {
    // Data with a sharp shoulder, a classic overshoot trap for plain cubics.
    std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<double> y = {0.0, 0.01, 0.02, 1.0, 1.01, 1.02};
    num::Pchip p(x, y);

    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(close_abs(p(x[i]), y[i], 1e-15));

    double prev = p(0.0);
    bool monotone = true;
    for (int i = 1; i <= 500; ++i) {
        const double v = p(5.0 * i / 500.0);
        if (v < prev - 1e-12) monotone = false;
        prev = v;
    }
    CHECK(monotone);

    // Derivative is consistent with a centered difference away from knots.
    const double h = 1e-6;
    const double fd = (p(2.5 + h) - p(2.5 - h)) / (2.0 * h);
    CHECK(close_rel(p.derivative(2.5), fd, 1e-5));
}
