#include <doctest.h>

#include <elslab/shooting.hpp>

#include <cmath>
#include <vector>

#include "support.hpp"

using namespace elslab;
using testutil::close_abs;
using testutil::close_rel;

namespace {

shoot::ShootingConfig horizon(double r_max) {
    shoot::ShootingConfig cfg;
    cfg.r_max = r_max;
    return cfg;
}

/// Worst relative deviation of the stored trajectory from A r^m on [lo, hi].
double worst_rel_dev(const shoot::RadialSolution& sol, double A, double m,
                     double lo, double hi) {
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.r_grid.size(); ++i) {
        const double r = sol.r_grid[i];
        if (r < lo || r > hi) continue;
        const double want = A * std::pow(r, m);
        worst = std::max(worst, std::fabs(sol.u_grid[i] - want) / want);
    }
    return worst;
}

}  // namespace

TEST_CASE("quadratic source on the capped tail: the closed-form ray") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);

    // u = 6 r^2 solves the tail equation exactly from (6, 12) at r = 1.
    const auto sol = shoot::integrate_ivp(nl, pot, 6.0, 12.0, horizon(100.0));
    CHECK(sol.classification == shoot::Classification::EntireLarge);
    CHECK(close_rel(shoot::eval_u(sol, 10.0), 600.0, 1e-8));
    CHECK(worst_rel_dev(sol, 6.0, 2.0, 1.0, 100.0) < 1e-7);

    // Interpolated evaluation between nodes keeps the closed form.
    CHECK(close_rel(shoot::eval_u(sol, 7.3), 6.0 * 7.3 * 7.3, 1e-8));
    CHECK(close_rel(shoot::eval_du(sol, 7.3), 12.0 * 7.3, 1e-7));

    // r^{D-1} u' is nondecreasing whenever the source is nonnegative.
    double prev = 0.0;
    double min_step = 1e300;
    for (std::size_t i = 0; i < sol.r_grid.size(); ++i) {
        const double flux =
            sol.r_grid[i] * sol.r_grid[i] * sol.du_grid[i];
        if (i) min_step = std::min(min_step, flux - prev);
        prev = flux;
    }
    CHECK(min_step >= -1e-9 * prev);

    // Halving the tolerance moves the endpoint by less than the error proxy.
    shoot::ShootingConfig tight = horizon(100.0);
    tight.rel_tol = 5e-11;
    const auto sol2 = shoot::integrate_ivp(nl, pot, 6.0, 12.0, tight);
    CHECK(std::fabs(sol2.u_grid.back() - sol.u_grid.back()) <=
          10.0 * std::max(sol.err_estimate, 1e-12));
}

TEST_CASE("steep shots blow up at a reproducible finite radius") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);

    const auto sol = shoot::integrate_ivp(nl, pot, 6.0, 30.0, horizon(1e3));
    REQUIRE(sol.classification == shoot::Classification::FiniteRadiusBlowup);
    CHECK(close_abs(sol.r_star, 6.67531487798344, 1e-9));
    CHECK(sol.r_star_width < 1e-10);
}

TEST_CASE("shallow shots stabilize to a finite limit") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);

    const auto sol = shoot::integrate_ivp(nl, pot, 6.0, 0.1, horizon(1e6));
    REQUIRE(sol.classification == shoot::Classification::BoundedLimit);
    CHECK(close_abs(sol.beta, 134.05514065, 1e-5));
}

TEST_CASE("a short horizon refuses to classify a still-growing shot") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    const auto sol = shoot::integrate_ivp(nl, pot, 1.0, 0.1, horizon(2.0));
    CHECK(sol.classification == shoot::Classification::Indeterminate);
}

TEST_CASE("trajectories touching zero are rejected with the hit radius") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    bool threw = false;
    try {
        shoot::integrate_ivp(nl, pot, 1.0, -2.0, horizon(10.0));
    } catch (const shoot::trajectory_invalid& e) {
        threw = true;
        CHECK(e.r_hit > 1.0);
        CHECK(e.r_hit < 2.0);
    }
    CHECK(threw);
}

TEST_CASE("separatrix search reproduces the closed-form slope") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);

    shoot::BisectLog log;
    const auto sol =
        shoot::find_els(nl, pot, 6.0, horizon(100.0), &log);
    CHECK(sol.classification == shoot::Classification::EntireLarge);
    CHECK(close_abs(sol.du0, 12.0, 1e-6));
    CHECK(log.width <= 2e-11);
    CHECK(worst_rel_dev(sol, 6.0, 2.0, 1.0, 100.0) < 1e-6);
    CHECK(log.probes.size() >= 10);

    // Decisively off-separatrix slopes land on opposite behaviors.
    const auto up = shoot::integrate_ivp(nl, pot, 6.0, 12.5, horizon(1e3));
    CHECK(up.classification == shoot::Classification::FiniteRadiusBlowup);
    const auto down = shoot::integrate_ivp(nl, pot, 6.0, 11.5, horizon(1e6));
    CHECK(down.classification == shoot::Classification::BoundedLimit);

    // Cubic source: the ray sqrt(2) r with slope sqrt(2).
    const auto nl3 = nonlin::make_nonlinearity("power:p=3");
    const auto sol3 = shoot::find_els(nl3, pot, std::sqrt(2.0), horizon(100.0));
    CHECK(close_abs(sol3.du0, std::sqrt(2.0), 1e-6));

    // The search is posed at the tail-normalized start radius only.
    const auto smooth = pot::make_potential("smooth:alpha=4", 3);
    CHECK_THROWS(shoot::find_els(nl, smooth, 6.0, horizon(100.0)));
}

TEST_CASE("center-value bisection hits a prescribed limit") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);

    const auto sol = shoot::find_bounded(nl, pot, 1.0, horizon(1e6));
    REQUIRE(sol.classification == shoot::Classification::BoundedLimit);
    CHECK(close_abs(sol.u0, 0.5698933601379395, 1e-9));
    CHECK(close_abs(sol.beta, 1.0, 1e-6));

    // Bounded trajectories rise monotonically toward the limit.
    for (std::size_t i = 1; i < sol.u_grid.size(); ++i)
        CHECK(sol.u_grid[i] >= sol.u_grid[i - 1] - 1e-12);
}

TEST_CASE("constant-density ball: blow-up pinned to the boundary") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");

    const auto sol = shoot::boundary_blowup_ball(nl, 1.0, 1.0, 3);
    REQUIRE(sol.classification == shoot::Classification::FiniteRadiusBlowup);
    CHECK(close_abs(sol.r_star, 1.0, 1e-7));
    CHECK(close_rel(sol.u0, 15.71793925762177, 1e-6));

    // Near the boundary u ~ kappa / (R - r)^2 with kappa = 6.
    double ksum = 0.0;
    int kn = 0;
    const double R = sol.r_star;
    for (std::size_t i = 0; i < sol.r_grid.size(); ++i) {
        const double d = R - sol.r_grid[i];
        if (d > 1e-5 * R && d < 1e-4 * R) {
            ksum += sol.u_grid[i] * d * d;
            ++kn;
        }
    }
    REQUIRE(kn > 0);
    CHECK(std::fabs(ksum / kn - 6.0) / 6.0 < 0.05);
}

TEST_CASE("blow-up radius shrinks as the center value rises") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const double want[3] = {3.96458563, 1.25371206, 0.396458563};
    double got[3];
    int i = 0;
    for (double u0 : {1.0, 10.0, 100.0}) {
        shoot::ShootingConfig cfg;
        cfg.r_max = 100.0;
        const auto sol = shoot::integrate_ivp(
            nl,
            [] {
                pot::RadialPotential unit;
                unit.key = "unit";
                unit.D = 3;
                unit.alpha = 0.0;
                unit.rho = [](double) { return 1.0; };
                unit.regular_at_zero = true;
                unit.natural_start = 0.0;
                return unit;
            }(),
            u0, 0.0, cfg);
        REQUIRE(sol.classification ==
                shoot::Classification::FiniteRadiusBlowup);
        got[i] = sol.r_star;
        CHECK(close_rel(got[i], want[i], 1e-6));
        ++i;
    }
    CHECK(got[0] > got[1]);
    CHECK(got[1] > got[2]);
    // Quadratic source scaling: r*(u0) = r*(1) / sqrt(u0).
    CHECK(close_rel(got[1], got[0] / std::sqrt(10.0), 1e-6));
    CHECK(close_rel(got[2], got[0] / 10.0, 1e-6));
}
