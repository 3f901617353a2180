#include <doctest.h>

#include <elslab/potential.hpp>

#include <cmath>
#include <vector>

#include "support.hpp"

using namespace elslab;
using testutil::close_abs;
using testutil::close_rel;
using testutil::geom_grid;

namespace {

const double kPi = std::acos(-1.0);

/// Closed form for the capped model with alpha = 4, D = 3:
/// U(r) = 4/(3r) - 1/(2 r^2) for r >= 1.
double capped_U_tail(double r) { return 4.0 / (3.0 * r) - 0.5 / (r * r); }

}  // namespace

TEST_CASE("capped model density: profile, mass, tail potential") {
    const auto pot = pot::make_potential("model:alpha=4", 3);
    CHECK(pot.alpha == 4.0);
    CHECK(pot.natural_start == 1.0);
    CHECK(close_abs(pot.rho(0.5), 1.0, 1e-15));
    CHECK(close_rel(pot.rho(2.0), std::pow(2.0, -4.0), 1e-15));

    // m(r) = r^3/3 on [0,1], then 1/3 + (1 - 1/r).
    CHECK(close_rel(pot::mass(pot, 1.0), 1.0 / 3.0, 1e-12));
    CHECK(close_rel(pot::mass(pot, 2.0), 1.0 / 3.0 + 0.5, 1e-12));

    CHECK(close_rel(pot::newtonian_potential(pot, 0.0), 1.0, 1e-9));
    CHECK(close_rel(pot::newtonian_potential(pot, 1.0), 5.0 / 6.0, 1e-9));
    for (double r : {1.0, 2.0, 5.0, 30.0})
        CHECK(close_rel(pot::newtonian_potential(pot, r), capped_U_tail(r),
                        1e-9));
}

TEST_CASE("tail potential is decreasing with the expected far-field decay") {
    const auto pot = pot::make_potential("model:alpha=4", 3);
    const auto grid = geom_grid(0.2, 100.0, 25);
    const auto U = pot::newtonian_potential_grid(pot, grid);
    REQUIRE(U.size() == grid.size());
    for (std::size_t i = 0; i + 1 < U.size(); ++i) CHECK(U[i + 1] < U[i]);
    for (std::size_t i = 0; i < U.size(); ++i)
        CHECK(close_rel(U[i], pot::newtonian_potential(pot, grid[i]), 1e-8));
    // U(r) * r^{D-2} approaches the total-mass limit 4/3.
    CHECK(close_abs(U.back() * grid.back(), 4.0 / 3.0, 1e-2));
}

TEST_CASE("blended joint stays close to the capped profile") {
    const auto pot = pot::make_potential("model:alpha=4,blend=1", 3);
    CHECK(close_abs(pot.rho(0.5), 1.0, 1e-15));
    CHECK(close_rel(pot.rho(1.5), std::pow(1.5, -4.0), 1e-12));
    // The joint is sandwiched between the two branch values.
    const double mid = pot.rho(0.97);
    CHECK(mid <= 1.0 + 1e-12);
    CHECK(mid >= std::pow(0.97, -4.0) - 1.0);
}

TEST_CASE("tail-mass integrals match closed forms") {
    const auto capped = pot::make_potential("model:alpha=4", 3);
    auto h = pot::check_Hrho(capped);
    REQUIRE(h.kind == num::Convergence::Finite);
    CHECK(close_rel(h.value, 1.0, 1e-8));

    const auto pert = pot::make_potential("perturbed:C=1", 3);
    h = pot::check_Hrho(pert);
    REQUIRE(h.kind == num::Convergence::Finite);
    CHECK(close_rel(h.value, 1.375, 1e-8));

    const auto smooth = pot::make_potential("smooth:alpha=4", 3);
    h = pot::check_Hrho(smooth);
    REQUIRE(h.kind == num::Convergence::Finite);
    CHECK(close_rel(h.value, 0.5, 1e-8));
    CHECK(close_rel(pot::newtonian_potential(smooth, 1.0), kPi / 8.0, 1e-9));

    // A hand-built density with a 1/r tail mass integrand diverges.
    pot::RadialPotential slow;
    slow.key = "custom";
    slow.D = 3;
    slow.alpha = 2.0;
    slow.rho = [](double r) { return 1.0 / (1.0 + r * r); };
    CHECK(pot::check_Hrho(slow).kind == num::Convergence::Divergent);
}

TEST_CASE("density validation rejects out-of-range parameters") {
    CHECK_THROWS(pot::make_potential("model:alpha=2", 3));
    CHECK_THROWS(pot::make_potential("model:alpha=4", 2));
    CHECK_THROWS(pot::make_potential("perturbed:C=-1", 3));
    CHECK_THROWS(pot::make_potential("nosuchfamily:alpha=4", 3));
}

TEST_CASE("perturbed family: rescaled density is Lipschitz in t = r^{2-D}") {
    const int D = 3;
    const double C = 1.0;
    const auto pot = pot::make_potential("perturbed:C=1", D);
    CHECK(close_rel(pot.rho(2.0), std::pow(2.0, -4.0) * 1.125, 1e-12));

    const auto g = [&](double t) {
        const double r = std::pow(t, 1.0 / (2.0 - D));
        return std::pow(r, 2.0 * D - 2.0) * pot.rho(r) /
               ((D - 2.0) * (D - 2.0));
    };
    double worst = 0.0;
    const int n = 1000;
    for (int i = 1; i < n; ++i) {
        const double t0 = static_cast<double>(i) / n;
        const double t1 = static_cast<double>(i + 1) / n;
        worst = std::max(worst, std::fabs(g(t1) - g(t0)) / (t1 - t0));
    }
    CHECK(worst <= (C + 1.0) / ((D - 2.0) * (D - 2.0)));
}

TEST_CASE("ellipsoid criterion arithmetic and validation") {
    auto c = pot::ellipsoid_criterion(0.9, 2.5, 4);
    CHECK(c.meanc_holds);
    CHECK(c.monotone_holds);

    c = pot::ellipsoid_criterion(1.0, 4.0, 3);  // alpha exactly at the cap
    CHECK(c.meanc_holds);
    CHECK_FALSE(c.monotone_holds);

    c = pot::ellipsoid_criterion(0.5, 3.0, 3);
    CHECK_FALSE(c.meanc_holds);
    CHECK_FALSE(c.monotone_holds);

    CHECK_THROWS(pot::ellipsoid_criterion(0.0, 3.0, 3));
    CHECK_THROWS(pot::ellipsoid_criterion(1.2, 3.0, 3));
    CHECK_THROWS(pot::ellipsoid_criterion(0.9, 2.0, 3));
    CHECK_THROWS(pot::ellipsoid_criterion(0.9, 3.0, 2));
}

TEST_CASE("level-set curvature margin: radial closed form and sign flip") {
    // a = 1 collapses to the radial family where the margin is
    // (2D - 2 - alpha)/r; level 4^{-3/2} puts the set at r = 2.
    pot::EllipsoidPotential round;
    round.D = 3;
    round.a = 1.0;
    round.alpha = 3.0;
    CHECK(close_abs(pot::mean_curvature_margin(round, 0.125, 64), 0.5, 1e-8));

    // Flattened case: the sign of the margin flips across a^2 (2D - 2).
    pot::EllipsoidPotential flat;
    flat.D = 4;
    flat.a = 0.9;
    flat.alpha = 4.80;
    CHECK(pot::mean_curvature_margin(flat, 0.2, 400) > 0.0);
    flat.alpha = 4.92;
    CHECK(pot::mean_curvature_margin(flat, 0.2, 400) < 0.0);

    // The arithmetic criterion agrees with the measured margins across a
    // small parameter sweep.
    for (double a : {0.8, 0.9, 1.0}) {
        for (double alpha : {2.5, 3.5, 4.5, 6.0}) {
            for (int D : {3, 4, 5}) {
                pot::EllipsoidPotential ep;
                ep.D = D;
                ep.a = a;
                ep.alpha = alpha;
                const bool measured =
                    pot::mean_curvature_margin(ep, 0.2, 200) >= -1e-9;
                CHECK(measured ==
                      pot::ellipsoid_criterion(a, alpha, D).meanc_holds);
            }
        }
    }
}
