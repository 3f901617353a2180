#include <elslab/transformed.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include <elslab/numerics.hpp>

namespace elslab::vt {

namespace {

constexpr double kGridPerDecade = 64.0;  // shared gap grid resolution
constexpr double kDirectFloor = 1e-6;    // hand over to the continued gap
constexpr double kCrossTol = 1e-7;       // relative slack before "crossed"
constexpr double kResampleStep = 0.01;   // ln t step for the residual check

/// Least-squares line y = a + b x; returns the intercept a.
double fit_intercept(const std::vector<double>& x,
                     const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return sy / n;
    const double slope = (n * sxy - sx * sy) / den;
    return (sy - slope * sx) / n;
}

/// First index of the trajectory usable in the (v,t) plane: r > 0 and, for
/// solutions started at a positive radius, at or past that start.
std::size_t first_usable(const shoot::RadialSolution& sol) {
    std::size_t j = 0;
    while (j < sol.r_grid.size() && sol.r_grid[j] <= 0.0) ++j;
    return j;
}

}  // namespace

TransformConfig make_transform_config(double alpha, int D) {
    if (!(alpha > 2.0))
        throw std::invalid_argument("transform requires alpha > 2");
    if (D < 3)
        throw std::invalid_argument("transform requires dimension D >= 3");
    TransformConfig cfg;
    cfg.alpha = alpha;
    cfg.D = D;
    cfg.K = (alpha - 2.0 * D + 2.0) / (alpha - 2.0);
    return cfg;
}

ProfileVT to_transformed(const shoot::RadialSolution& sol,
                         const TransformConfig& cfg) {
    if (sol.classification != shoot::Classification::EntireLarge)
        throw std::invalid_argument(
            "profile reindexing needs an unbounded increasing trajectory");
    const std::size_t j0 = first_usable(sol);
    const std::size_t n = sol.r_grid.size();
    if (n - j0 < 2)
        throw std::invalid_argument("trajectory has fewer than two usable "
                                    "nodes");
    ProfileVT out;
    out.cfg = cfg;
    out.v_grid.reserve(n - j0);
    out.t_grid.reserve(n - j0);
    out.V_grid.reserve(n - j0);
    const double half = 0.5 * cfg.alpha;
    const double speed = 2.0 / (cfg.alpha - 2.0);
    for (std::size_t j = j0; j < n; ++j) {
        const double r = sol.r_grid[j];
        const double u = sol.u_grid[j];
        const double du = sol.du_grid[j];
        if (!out.v_grid.empty() && !(u > out.v_grid.back()))
            throw std::invalid_argument(
                "trajectory is not strictly increasing; cannot index by "
                "solution value (r=" + std::to_string(r) + ")");
        if (!(du > 0.0))
            throw std::invalid_argument(
                "trajectory slope is not positive; cannot index by solution "
                "value (r=" + std::to_string(r) + ")");
        out.v_grid.push_back(u);
        out.t_grid.push_back(std::pow(r, 1.0 - half));
        out.V_grid.push_back(speed * std::pow(r, half) * du);
    }
    return out;
}

double check_tKV_monotone(const ProfileVT& profile,
                          const TransformConfig& cfg) {
    const std::size_t n = profile.v_grid.size();
    if (n < 2)
        throw std::invalid_argument(
            "monotonicity check needs at least two profile points");
    double min_inc = std::numeric_limits<double>::infinity();
    double prev = std::pow(profile.t_grid[0], cfg.K) * profile.V_grid[0];
    for (std::size_t j = 1; j < n; ++j) {
        const double cur = std::pow(profile.t_grid[j], cfg.K) *
                           profile.V_grid[j];
        const double dv = profile.v_grid[j] - profile.v_grid[j - 1];
        min_inc = std::min(min_inc, (cur - prev) / dv);
        prev = cur;
    }
    return min_inc;
}

double hopital_limit(const ProfileVT& profile, const nonlin::Nonlinearity& nl,
                     int D) {
    const double alpha_star = 2.0 * D - 2.0;
    if (std::abs(profile.cfg.alpha - alpha_star) >
        1e-12 * std::max(1.0, alpha_star))
        throw std::invalid_argument(
            "tail limit is defined for the alpha = 2D-2 family only");
    const std::size_t n = profile.v_grid.size();
    if (n < 8) throw std::invalid_argument("profile tail is too short");
    const double v_lo_all = profile.v_grid.front();
    const double v_hi = profile.v_grid.back();
    if (!(v_hi >= 1e3 * v_lo_all))
        throw std::invalid_argument(
            "profile spans less than three decades in solution value");

    // Fit at the profile's own nodes: interpolating V(v) between sparse
    // nodes costs far more accuracy than the fit gains from even spacing.
    const double v_lo = v_hi / 100.0;  // last two decades
    std::vector<double> x, y;
    for (std::size_t j = 0; j < n; ++j) {
        const double v = profile.v_grid[j];
        if (v < v_lo) continue;
        const double F = nonlin::eval_F(nl, v);
        if (!(F > 0.0))
            throw numerical_error("nonnegative primitive required for the "
                                  "tail limit");
        x.push_back(1.0 / v);
        y.push_back(profile.V_grid[j] * profile.V_grid[j] / F);
    }
    if (x.size() < 4)
        throw std::invalid_argument(
            "profile tail has too few nodes in the fitting window");
    return fit_intercept(x, y);
}

GapReport uniqueness_gap(const shoot::RadialSolution& a,
                         const shoot::RadialSolution& b,
                         const nonlin::Nonlinearity& nl,
                         const pot::RadialPotential& pot,
                         const TransformConfig& cfg) {
    if (a.classification != shoot::Classification::EntireLarge ||
        b.classification != shoot::Classification::EntireLarge)
        throw std::invalid_argument(
            "gap report needs two unbounded increasing trajectories");
    if (a.D != cfg.D || b.D != cfg.D)
        throw std::invalid_argument("dimension mismatch in gap report");

    const std::size_t ja = first_usable(a), jb = first_usable(b);
    const double r_lo = std::max(a.r_grid[ja], b.r_grid[jb]);
    const double r_hi = std::min(a.r_grid.back(), b.r_grid.back());
    if (!(r_hi > r_lo))
        throw std::invalid_argument("trajectories do not overlap in radius");

    // Order the pair by value at the shared start.
    const shoot::RadialSolution* lo_sol = &a;
    const shoot::RadialSolution* hi_sol = &b;
    if (shoot::eval_u(a, r_lo) > shoot::eval_u(b, r_lo))
        std::swap(lo_sol, hi_sol);

    const std::size_t n = static_cast<std::size_t>(
        std::ceil(kGridPerDecade * std::log10(r_hi / r_lo))) + 1;
    const double q = std::pow(r_hi / r_lo, 1.0 / static_cast<double>(n - 1));

    GapReport rep;
    rep.K = cfg.K;
    rep.r_grid.resize(n);
    rep.gap.resize(n);
    rep.envelope.resize(n);
    rep.ratio.resize(n);
    {
        double r = r_lo;
        for (std::size_t j = 0; j < n; ++j, r *= q)
            rep.r_grid[j] = std::min(r, r_hi);
    }
    const double env_pow =
        (1.0 - 0.5 * cfg.alpha) * (cfg.K < 0.0 ? 1.0 : 1.0 - cfg.K);
    for (std::size_t j = 0; j < n; ++j)
        rep.envelope[j] = std::pow(rep.r_grid[j], env_pow);

    // Direct differencing while the gap is resolvable above integration
    // error; record where it stops being so.
    std::size_t j_sw = n;
    for (std::size_t j = 0; j < n; ++j) {
        const double r = rep.r_grid[j];
        const double u1 = shoot::eval_u(*lo_sol, r);
        const double u2 = shoot::eval_u(*hi_sol, r);
        const double g = u2 - u1;
        if (g < -kCrossTol * std::abs(u2))
            throw ordering_violation(
                "trajectories cross near r=" + std::to_string(r) +
                "; the gap changed sign beyond noise");
        if (g < kDirectFloor * std::abs(u2)) {
            j_sw = j;
            break;
        }
        rep.gap[j] = g;
    }
    rep.switch_radius = j_sw < n ? rep.r_grid[j_sw] : r_hi;

    if (j_sw < n) {
        // Continue the gap through the logarithmic derivative psi = g'/g of
        // the linearized equation g'' + (D-1)g'/r = rho f'(u) g. Forward
        // integration is repelled from the decaying branch, so psi is
        // integrated backward in x = ln r from the decaying-root value at
        // the far end, accumulating J(x) = int_x^{x_end} r psi dx'.
        const double gap_sw = j_sw == 0
                                  ? shoot::eval_u(*hi_sol, rep.r_grid[0]) -
                                        shoot::eval_u(*lo_sol, rep.r_grid[0])
                                  : rep.gap[j_sw - 1];
        const int Dm1 = cfg.D - 1;
        const auto slope_field = [&](double x, double psi) {
            const double r = std::exp(x);
            const double um = 0.5 * (shoot::eval_u(*lo_sol, r) +
                                     shoot::eval_u(*hi_sol, r));
            return r * pot.rho(r) * nl.fprime(um) - r * psi * psi -
                   Dm1 * psi;
        };
        {
            const double r = rep.r_grid[n - 1];
            const double um = 0.5 * (shoot::eval_u(*lo_sol, r) +
                                     shoot::eval_u(*hi_sol, r));
            const double c = r * r * pot.rho(r) * nl.fprime(um);
            const double disc = (cfg.D - 2) * (cfg.D - 2) * 0.25 +
                                std::max(c, 0.0);
            const double lam = -0.5 * (cfg.D - 2) - std::sqrt(disc);
            double psi = lam / r;
            double J = 0.0;
            std::vector<double> Jnode(n - j_sw, 0.0);
            Jnode[n - 1 - j_sw] = 0.0;
            for (std::size_t j = n - 1; j > j_sw; --j) {
                const double x1 = std::log(rep.r_grid[j]);
                const double x0 = std::log(rep.r_grid[j - 1]);
                const int sub = 4;
                const double h = (x0 - x1) / sub;  // negative
                double x = x1;
                for (int s = 0; s < sub; ++s) {
                    // RK4 on the pair (psi, J), dJ/dx = r psi.
                    const double k1p = slope_field(x, psi);
                    const double k1j = std::exp(x) * psi;
                    const double k2p =
                        slope_field(x + 0.5 * h, psi + 0.5 * h * k1p);
                    const double k2j =
                        std::exp(x + 0.5 * h) * (psi + 0.5 * h * k1p);
                    const double k3p =
                        slope_field(x + 0.5 * h, psi + 0.5 * h * k2p);
                    const double k3j =
                        std::exp(x + 0.5 * h) * (psi + 0.5 * h * k2p);
                    const double k4p = slope_field(x + h, psi + h * k3p);
                    const double k4j = std::exp(x + h) * (psi + h * k3p);
                    psi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
                    J += h / 6.0 * (k1j + 2.0 * k2j + 2.0 * k3j + k4j);
                    x += h;
                }
                Jnode[j - 1 - j_sw] = J;
            }
            // J decreases going backward (psi < 0), so J(x_j) - J(x_sw)
            // is the forward integral from the switch point to node j.
            const double J_sw = Jnode[0];
            for (std::size_t j = j_sw; j < n; ++j)
                rep.gap[j] =
                    gap_sw * std::exp(Jnode[j - j_sw] - J_sw);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        rep.ratio[j] = rep.gap[j] / rep.envelope[j];
        rep.max_ratio = std::max(rep.max_ratio, rep.ratio[j]);
    }
    return rep;
}

ResidualReport vequation_residual(const shoot::RadialSolution& sol,
                                  const nonlin::Nonlinearity& nl,
                                  const TransformConfig& cfg) {
    const std::size_t j0 = first_usable(sol);
    if (sol.r_grid.size() - j0 < 4)
        throw std::invalid_argument("trajectory too short for the residual "
                                    "check");
    const double r_start = sol.r_grid[j0];
    const double r_end = sol.r_grid.back();
    const double slope_x = 1.0 - 0.5 * cfg.alpha;  // x = ln t = slope_x ln r
    const double x_hi = slope_x * std::log(r_start);
    const double x_lo = slope_x * std::log(r_end);
    const double h = kResampleStep;
    const std::size_t m =
        static_cast<std::size_t>(std::floor((x_hi - x_lo) / h)) + 1;
    if (m < 7)
        throw std::invalid_argument("trajectory spans too little of the "
                                    "transformed axis");
    std::vector<double> vx(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double x = x_lo + static_cast<double>(i) * h;
        const double r = std::exp(x / slope_x);
        vx[i] = shoot::eval_u(sol, std::min(std::max(r, r_start), r_end));
    }
    const double c = 4.0 / ((cfg.alpha - 2.0) * (cfg.alpha - 2.0));
    ResidualReport rep;
    for (std::size_t i = 2; i + 2 < m; ++i) {
        const double d1 =
            (-vx[i + 2] + 8.0 * vx[i + 1] - 8.0 * vx[i - 1] + vx[i - 2]) /
            (12.0 * h);
        const double d2 = (-vx[i + 2] + 16.0 * vx[i + 1] - 30.0 * vx[i] +
                           16.0 * vx[i - 1] - vx[i - 2]) /
                          (12.0 * h * h);
        const double x = x_lo + static_cast<double>(i) * h;
        const double t = std::exp(x);
        const double vt = d1 / t;
        const double vtt = (d2 - d1) / (t * t);
        const double fv = nl.f(vx[i]);
        const double res = vtt + cfg.K / t * vt - c * fv;
        rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(res));
        rep.max_rel_residual =
            std::max(rep.max_rel_residual,
                     std::abs(res) / std::max(std::abs(fv), 1e-300));
        ++rep.n_points;
    }
    return rep;
}

}  // namespace elslab::vt
