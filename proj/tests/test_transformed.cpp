#include <doctest.h>

#include <elslab/transformed.hpp>

#include <cmath>
#include <cstdio>
#include <vector>

#include "support.hpp"

using namespace elslab;
using testutil::close_abs;
using testutil::close_rel;

namespace {

/// Exact ray A r^m for the capped tail: power p, exponent alpha, dimension D.
shoot::RadialSolution exact_ray(double p, double alpha, int D, double r_max) {
    const double m = (alpha - 2.0) / (p - 1.0);
    const double A = std::pow(m * (m + D - 2.0), 1.0 / (p - 1.0));
    char key[64];
    std::snprintf(key, sizeof key, "power:p=%g", p);
    char pkey[64];
    std::snprintf(pkey, sizeof pkey, "model:alpha=%g", alpha);
    const auto nl = nonlin::make_nonlinearity(key);
    const auto pot = pot::make_potential(pkey, D);
    shoot::ShootingConfig cfg;
    cfg.r_max = r_max;
    return shoot::integrate_ivp(nl, pot, A, m * A, cfg);
}

}  // namespace

TEST_CASE("transform parameters: damping exponent across the family") {
    CHECK(close_abs(vt::make_transform_config(4.0, 3).K, 0.0, 1e-15));
    CHECK(close_abs(vt::make_transform_config(10.0, 3).K, 0.75, 1e-15));
    CHECK(close_abs(vt::make_transform_config(3.0, 3).K, -1.0, 1e-15));
    CHECK(close_abs(vt::make_transform_config(6.0, 4).K, 0.0, 1e-15));
    CHECK(close_abs(vt::make_transform_config(8.0, 5).K, 0.0, 1e-15));

    for (double alpha : {2.1, 2.5, 3.0, 4.0, 6.0, 10.0, 20.0}) {
        for (int D : {3, 4, 5}) {
            const auto cfg = vt::make_transform_config(alpha, D);
            CHECK(cfg.K < 1.0);
            if (std::fabs(alpha - (2.0 * D - 2.0)) > 1e-12)
                CHECK(std::fabs(cfg.K) > 1e-13);
        }
    }

    CHECK_THROWS(vt::make_transform_config(2.0, 3));
    CHECK_THROWS(vt::make_transform_config(4.0, 2));
}

TEST_CASE("value-reindexed profile: algebraic round trip and shape") {
    const auto sol = exact_ray(2.0, 4.0, 3, 100.0);
    REQUIRE(sol.classification == shoot::Classification::EntireLarge);
    const auto cfg = vt::make_transform_config(4.0, 3);
    const auto prof = vt::to_transformed(sol, cfg);

    REQUIRE(prof.v_grid.size() >= 8);
    for (std::size_t j = 1; j < prof.v_grid.size(); ++j) {
        CHECK(prof.v_grid[j] > prof.v_grid[j - 1]);
        CHECK(prof.t_grid[j] < prof.t_grid[j - 1]);
        CHECK(prof.V_grid[j] > 0.0);
    }

    // Undo t = r^{1 - alpha/2} and compare against the trajectory itself.
    for (std::size_t j = 0; j < prof.v_grid.size(); j += 7) {
        const double r = std::pow(prof.t_grid[j], 2.0 / (2.0 - cfg.alpha));
        CHECK(close_rel(prof.v_grid[j], shoot::eval_u(sol, r), 1e-10));
    }

    // On the exact ray, V(v) = 12 r^3 = 12 (v/6)^{3/2}.
    for (std::size_t j = 0; j < prof.v_grid.size(); j += 11) {
        const double want = 12.0 * std::pow(prof.v_grid[j] / 6.0, 1.5);
        CHECK(close_rel(prof.V_grid[j], want, 1e-7));
    }
}

TEST_CASE("profiles from the wrong trajectory family are rejected") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    shoot::ShootingConfig cfg;
    cfg.r_max = 1e6;
    const auto bounded = shoot::integrate_ivp(nl, pot, 6.0, 0.1, cfg);
    REQUIRE(bounded.classification == shoot::Classification::BoundedLimit);
    CHECK_THROWS(
        vt::to_transformed(bounded, vt::make_transform_config(4.0, 3)));
}

TEST_CASE("damped speed t^K V increases along every profile") {
    for (double p : {2.0, 3.0}) {
        for (double alpha : {4.0, 10.0, 3.0}) {
            const double r_max = alpha > 6.0 ? 30.0 : 100.0;
            const auto sol = exact_ray(p, alpha, 3, r_max);
            CAPTURE(p);
            CAPTURE(alpha);
            REQUIRE(sol.classification ==
                    shoot::Classification::EntireLarge);
            const auto cfg = vt::make_transform_config(alpha, 3);
            const auto prof = vt::to_transformed(sol, cfg);
            CHECK(vt::check_tKV_monotone(prof, cfg) > 0.0);
        }
    }
}

TEST_CASE("transformed-equation residual vanishes on solutions") {
    const auto cfg = vt::make_transform_config(4.0, 3);

    const auto p2 = exact_ray(2.0, 4.0, 3, 100.0);
    const auto r2 = vt::vequation_residual(p2,
        nonlin::make_nonlinearity("power:p=2"), cfg);
    CHECK(r2.n_points > 100);
    CHECK(r2.max_rel_residual < 1e-6);

    const auto p3 = exact_ray(3.0, 4.0, 3, 100.0);
    const auto r3 = vt::vequation_residual(p3,
        nonlin::make_nonlinearity("power:p=3"), cfg);
    CHECK(r3.max_rel_residual < 1e-6);
}

TEST_CASE("speed-squared over antiderivative settles at the tail limit") {
    struct Row {
        int D;
        double alpha;
    };
    for (const Row row : {Row{3, 4.0}, Row{4, 6.0}, Row{5, 8.0}}) {
        const double r_max = row.alpha > 6.0 ? 30.0 : 100.0;
        const auto sol = exact_ray(2.0, row.alpha, row.D, r_max);
        CAPTURE(row.D);
        const auto cfg = vt::make_transform_config(row.alpha, row.D);
        const auto prof = vt::to_transformed(sol, cfg);
        const double lim = vt::hopital_limit(
            prof, nonlin::make_nonlinearity("power:p=2"), row.D);
        const double want = 2.0 / ((row.D - 2.0) * (row.D - 2.0));
        CHECK(close_rel(lim, want, 1e-6));
    }

    // Wrong family: the limit only exists when the damping exponent is zero.
    const auto sol10 = exact_ray(2.0, 10.0, 3, 30.0);
    const auto cfg10 = vt::make_transform_config(10.0, 3);
    const auto prof10 = vt::to_transformed(sol10, cfg10);
    CHECK_THROWS(vt::hopital_limit(
        prof10, nonlin::make_nonlinearity("power:p=2"), 3));
}

TEST_CASE("gap between ordered trajectories decays inside its envelope") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    shoot::ShootingConfig cfg;
    cfg.r_max = 100.0;
    const auto a = shoot::find_els(nl, pot, 2.0, cfg);
    const auto b = shoot::find_els(nl, pot, 5.0, cfg);
    const auto tc = vt::make_transform_config(4.0, 3);

    const auto rep = vt::uniqueness_gap(a, b, nl, pot, tc);
    REQUIRE(!rep.r_grid.empty());
    CHECK(close_abs(rep.K, 0.0, 1e-15));

    double gap10 = 0.0, gap100 = 0.0;
    for (std::size_t i = 0; i < rep.r_grid.size(); ++i) {
        const double r = rep.r_grid[i];
        if (std::fabs(r - 10.0) < 0.5) gap10 = rep.gap[i];
        if (std::fabs(r - 100.0) < 5.0) gap100 = rep.gap[i];
        CHECK(rep.gap[i] >= 0.0);  // ordering is preserved
        if (r >= 1.0)
            CHECK(close_rel(rep.envelope[i], 1.0 / r, 1e-12));
    }
    CHECK(gap10 > 0.0);
    CHECK(close_rel(gap10, 3.87385e-4, 1e-2));
    CHECK(gap100 / gap10 < 1e-3);
    CHECK(rep.max_ratio <= 10.0);
    CHECK(rep.switch_radius > 2.0);
    CHECK(rep.switch_radius < 50.0);

    // A trajectory against itself has no gap at all.
    const auto same = vt::uniqueness_gap(a, a, nl, pot, tc);
    for (double g : same.gap) CHECK(close_abs(g, 0.0, 1e-12));

    // Crossing inputs are a solver defect and must be loud.
    auto hi = b, lo = a;
    for (std::size_t i = 0; i < hi.u_grid.size(); ++i) {
        // Push the upper trajectory below the lower one mid-grid.
        if (hi.r_grid[i] > 10.0) hi.u_grid[i] = 0.5;
    }
    CHECK_THROWS_AS(vt::uniqueness_gap(lo, hi, nl, pot, tc),
                    vt::ordering_violation);
}
