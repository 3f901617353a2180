#include <doctest.h>

#include <elslab/bounds.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "support.hpp"

using namespace elslab;
using testutil::close_abs;
using testutil::close_rel;
using testutil::geom_grid;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

shoot::RadialSolution exact_ray_p2(double alpha, double r_max) {
    const double m = alpha - 2.0;
    const double A = m * (m + 1.0);
    char pkey[64];
    std::snprintf(pkey, sizeof pkey, "model:alpha=%g", alpha);
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential(pkey, 3);
    shoot::ShootingConfig cfg;
    cfg.r_max = r_max;
    return shoot::integrate_ivp(nl, pot, A, m * A, cfg);
}

double min_defined_margin(const bounds::BoundReport& rep) {
    double m = kInf;
    for (std::size_t j = 0; j < rep.grid.size(); ++j)
        if (rep.defined[j]) m = std::min(m, rep.margin[j]);
    return m;
}

}  // namespace

TEST_CASE("explicit subsolutions satisfy their differential inequality") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    const auto grid = geom_grid(0.1, 100.0, 25);

    const auto w10 = bounds::subsolution_w_beta(nl, pot, 10.0, grid);
    CHECK(w10.verdict);
    CHECK(min_defined_margin(w10) >= -w10.tolerance);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (!w10.defined[j]) continue;
        CHECK(w10.primal[j] > 0.0);
        CHECK(w10.primal[j] < 10.0);
        if (j && w10.defined[j - 1])
            CHECK(w10.primal[j] >= w10.primal[j - 1] - 1e-12);
    }

    // The family is ordered in its ceiling: w_2 <= w_5 <= w_inf.
    const auto w2 = bounds::subsolution_w_beta(nl, pot, 2.0, grid);
    const auto w5 = bounds::subsolution_w_beta(nl, pot, 5.0, grid);
    const auto winf = bounds::subsolution_w_beta(nl, pot, kInf, grid);
    CHECK(w2.verdict);
    CHECK(w5.verdict);
    CHECK(winf.verdict);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (w2.defined[j] && w5.defined[j])
            CHECK(w2.primal[j] <= w5.primal[j] + 1e-9);
        if (w5.defined[j] && winf.defined[j])
            CHECK(w5.primal[j] <= winf.primal[j] + 1e-9);
    }
}

TEST_CASE("remaining-integral floor along unbounded trajectories") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    const auto sol = exact_ray_p2(4.0, 100.0);

    const auto rep = bounds::implicit_lower_bound(sol, nl, pot);
    CHECK(rep.verdict);
    // At the start radius: int_6^inf s^{-2} = 1/6 against U(1) = 5/6.
    REQUIRE(rep.defined[0]);
    CHECK(close_rel(rep.grid[0], 1.0, 1e-12));
    CHECK(close_rel(rep.primal[0], 1.0 / 6.0, 1e-6));
    CHECK(close_rel(rep.bound[0], 5.0 / 6.0, 1e-6));
    const double min_margin = min_defined_margin(rep);
    CHECK(min_margin >= 0.013);
    CHECK(min_margin <= 0.014);

    // Slowly superlinear f with a divergent remaining integral cannot be
    // floored this way.
    const auto p1 = nonlin::make_nonlinearity("power:p=1");
    CHECK_THROWS_AS(bounds::implicit_lower_bound(sol, p1, pot),
                    bounds::inapplicable_error);
}

TEST_CASE("the floor is a boundary-condition statement, not a given") {
    // From a low inner value the remaining integral exceeds U at the start
    // radius; the check must report the violation rather than mask it.
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    shoot::ShootingConfig cfg;
    cfg.r_max = 100.0;
    const auto sol = shoot::find_els(nl, pot, 1.0, cfg);
    CHECK(close_abs(sol.du0, 29.9924475674, 1e-3));

    const auto rep = bounds::implicit_lower_bound(sol, nl, pot);
    CHECK_FALSE(rep.verdict);
    CHECK(close_abs(min_defined_margin(rep), -1.0 / 6.0, 1e-3));
}

TEST_CASE("growth ceiling holds with admissible prefactors and fails beyond") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto sol = exact_ray_p2(4.0, 100.0);

    const auto rep = bounds::gamma_bound(sol, nl, 4.0, 0.5);
    CHECK(rep.verdict);
    CHECK(rep.r_min <= 1.0 + 1e-9);
    CHECK(close_rel(rep.c_max, 1.71731534225441104, 1e-6));
    for (std::size_t j = 0; j < rep.grid.size(); ++j)
        if (rep.defined[j]) CHECK(rep.margin[j] >= 0.0);

    // Ceiling and trajectory share the same growth order: their ratio is
    // asymptotically constant.
    double ratio10 = 0.0, ratio100 = 0.0;
    for (std::size_t j = 0; j < rep.grid.size(); ++j) {
        if (!rep.defined[j]) continue;
        if (std::fabs(rep.grid[j] - 10.0) < 0.5)
            ratio10 = rep.bound[j] / rep.primal[j];
        if (std::fabs(rep.grid[j] - 100.0) < 5.0)
            ratio100 = rep.bound[j] / rep.primal[j];
    }
    REQUIRE(ratio10 > 0.0);
    REQUIRE(ratio100 > 0.0);
    CHECK(close_rel(ratio10, ratio100, 0.01));

    // A prefactor above the admissible maximum must fail. The quartic-tail
    // ceiling saturates above 1, so use the steeper tail whose maximum sits
    // inside the parameter domain.
    const auto steep = exact_ray_p2(10.0, 15.0);
    const auto capped = bounds::gamma_bound(steep, nl, 10.0, 0.4);
    CHECK(capped.verdict);
    CHECK(close_rel(capped.c_max, 4.20654631597636274 / std::sqrt(72.0), 1e-4));
    const auto bad = bounds::gamma_bound(steep, nl, 10.0, 0.9);
    CHECK_FALSE(bad.verdict);

    // Prefactors outside (0,1) are parameter errors, not verdicts.
    CHECK_THROWS_AS(bounds::gamma_bound(sol, nl, 4.0, 1.75),
                    std::invalid_argument);
}

TEST_CASE("ratio hypothesis: scaling constant of the power family") {
    struct Row {
        const char* key;
        double want;
    };
    const Row rows[] = {
        {"power:p=2", 17.6950319084543094},
        {"power:p=3", 6.875185818020},
        {"power:p=5", 2.94917198474238491},
    };
    for (const auto& row : rows) {
        const auto nl = nonlin::make_nonlinearity(row.key);
        const auto res = bounds::fiddgr_check(nl, 1.0);
        CAPTURE(row.key);
        CHECK(res.holds);
        CHECK(close_rel(res.best_C, row.want, 1e-4));
    }
}

TEST_CASE("radial energy: exact cancellation and the hypothesis gate") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    const auto sol = exact_ray_p2(4.0, 100.0);

    const auto rep = bounds::energy_P_radial(sol, pot, nl, 1.0);
    CHECK(rep.verdict);
    CHECK(std::fabs(rep.sup_value) <= 1e-6 * nonlin::eval_F(nl, 6.0));
    for (std::size_t j = 0; j < rep.grid.size(); ++j) {
        if (!rep.defined[j]) continue;
        const double F = nonlin::eval_F(nl, shoot::eval_u(sol, rep.grid[j]));
        CHECK(std::fabs(rep.primal[j]) <= 1e-6 * F);
    }

    const auto nl3 = nonlin::make_nonlinearity("power:p=3");
    const auto pot3 = pot::make_potential("model:alpha=4", 3);
    shoot::ShootingConfig cfg;
    cfg.r_max = 100.0;
    const auto sol3 = shoot::integrate_ivp(nl3, pot3, std::sqrt(2.0),
                                           std::sqrt(2.0), cfg);
    const auto rep3 = bounds::energy_P_radial(sol3, pot3, nl3, 1.0);
    CHECK(rep3.verdict);

    // Tails with r^{2D-2} rho decreasing violate the monotone-weight
    // hypothesis and must be rejected, not silently checked.
    const auto pot5 = pot::make_potential("model:alpha=5", 3);
    const auto sol5 = exact_ray_p2(5.0, 50.0);
    CHECK_THROWS_AS(bounds::energy_P_radial(sol5, pot5, nl, 1.0),
                    bounds::inapplicable_error);
}

TEST_CASE("bounded solutions are sandwiched between w_beta and beta") {
    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    const auto sol = shoot::find_bounded(nl, pot, 1.0);
    REQUIRE(sol.classification == shoot::Classification::BoundedLimit);

    std::vector<double> grid;
    for (std::size_t i = 0; i < sol.r_grid.size(); i += 8)
        if (sol.r_grid[i] > 0.0 && sol.r_grid[i] <= 50.0)
            grid.push_back(sol.r_grid[i]);
    REQUIRE(grid.size() > 5);

    const auto wrep = bounds::subsolution_w_beta(nl, pot, sol.beta, grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (!wrep.defined[j]) continue;
        const double u = shoot::eval_u(sol, grid[j]);
        CHECK(wrep.primal[j] <= u + 1e-9);
        CHECK(u <= sol.beta + 1e-6);
    }

    // The unbounded-ceiling member stays below every unbounded trajectory.
    const auto ray = exact_ray_p2(4.0, 100.0);
    std::vector<double> rgrid = geom_grid(1.0, 100.0, 17);
    const auto winf = bounds::subsolution_w_beta(nl, pot, kInf, rgrid);
    for (std::size_t j = 0; j < rgrid.size(); ++j) {
        if (!winf.defined[j]) continue;
        CHECK(winf.primal[j] <= shoot::eval_u(ray, rgrid[j]) + 1e-9);
    }
}
