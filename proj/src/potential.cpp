#include <elslab/potential.hpp>

#include <elslab/detail/keyparse.hpp>
#include <elslab/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace elslab::pot {

/// Shared memo of cumulative-mass checkpoints plus the cached integrability
/// verdict; guarded so potentials can be evaluated from parallel sweeps.
struct MassCache {
    std::mutex mu;
    std::vector<std::pair<double, double>> pts;  // ascending (s, m(s))
    int hrho_state = 0;                          // 0 unknown, 1 finite, -1 divergent
    double hrho_value = 0.0;
    double hrho_err = 0.0;
};

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_positive(const RadialPotential& pot) {
    // Sample grid: a linear sweep through the cap region plus a log sweep of
    // the tail, so both piecewise branches are exercised.
    for (int i = 0; i <= 32; ++i) {
        const double r = static_cast<double>(i) / 32.0;
        const double v = pot.rho(r);
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("density '" + pot.key +
                                        "' is not positive at r=" +
                                        std::to_string(r));
    }
    for (int i = 0; i <= 32; ++i) {
        const double r = std::pow(10.0, 3.0 * static_cast<double>(i) / 32.0);
        const double v = pot.rho(r);
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("density '" + pot.key +
                                        "' is not positive at r=" +
                                        std::to_string(r));
    }
}

/// Finite-difference audit of the perturbation bound |sigma'(r)| <= C r^{1-D}.
void validate_perturbation(const RadialPotential& pot) {
    for (int i = 0; i <= 64; ++i) {
        const double r = std::pow(10.0, 2.0 * static_cast<double>(i) / 64.0);
        const double h = 1e-5 * r;
        const double d = (pot.sigma(r + h) - pot.sigma(r - h)) / (2.0 * h);
        const double bound = pot.perturb_C * std::pow(r, 1.0 - pot.D);
        if (std::abs(d) > bound * (1.0 + 1e-6) + 1e-300)
            throw std::invalid_argument(
                "perturbation of '" + pot.key +
                "' violates its derivative bound at r=" + std::to_string(r));
    }
}

RadialPotential make_model(const detail::KeyParts& parts, int D) {
    const double alpha = detail::require_number(parts, "alpha");
    if (!(alpha > 2.0))
        throw std::invalid_argument("model density requires alpha > 2");
    bool blend = false;
    if (parts.params.count("blend"))
        blend = detail::require_number(parts, "blend") != 0.0;

    RadialPotential pot;
    pot.key = parts.name + ":alpha=" + std::to_string(alpha) +
              (blend ? ",blend=1" : "");
    pot.D = D;
    pot.alpha = alpha;
    pot.regular_at_zero = true;
    pot.natural_start = 1.0;
    if (!blend) {
        pot.rho = [alpha](double r) {
            return r <= 1.0 ? 1.0 : std::pow(r, -alpha);
        };
        const int Dc = D;
        pot.mass_closed = [alpha, Dc](double s) {
            const double Dd = static_cast<double>(Dc);
            if (s <= 1.0) return std::pow(s, Dd) / Dd;
            const double head = 1.0 / Dd;
            if (std::abs(Dd - alpha) < 1e-12) return head + std::log(s);
            return head + (std::pow(s, Dd - alpha) - 1.0) / (Dd - alpha);
        };
    } else {
        // C1 joint over [0.9, 1]: cubic Hermite between the flat cap (value 1,
        // slope 0) and the tail (value 1, slope -alpha at r = 1).
        pot.rho = [alpha](double r) {
            if (r <= 0.9) return 1.0;
            if (r >= 1.0) return std::pow(r, -alpha);
            const double t = (r - 0.9) / 0.1;
            return 1.0 - 0.1 * alpha * (t * t * t - t * t);
        };
    }
    return pot;
}

RadialPotential make_perturbed(const detail::KeyParts& parts, int D) {
    const double C = detail::require_number(parts, "C");
    if (!(C >= 0.0))
        throw std::invalid_argument("perturbed density requires C >= 0");
    std::string which = "power";
    if (parts.params.count("sigma")) which = detail::require_string(parts, "sigma");

    const double Dd = static_cast<double>(D);
    double c0 = 0.0;  // sigma(r) = c0 * r^{1-D}
    if (which == "power") {
        c0 = C / (Dd - 1.0);
    } else if (which == "zero") {
        c0 = 0.0;
    } else {
        throw std::invalid_argument("unknown perturbation '" + which +
                                    "' (expected power or zero)");
    }

    RadialPotential pot;
    pot.key = parts.name + ":C=" + std::to_string(C) + ",sigma=" + which;
    pot.D = D;
    pot.alpha = 2.0 * Dd - 2.0;
    pot.regular_at_zero = true;
    pot.natural_start = 1.0;
    pot.perturb_C = C;
    pot.sigma = [c0, Dd](double r) { return c0 * std::pow(r, 1.0 - Dd); };
    const double rho1 = 1.0 + c0;
    pot.rho = [c0, Dd, rho1](double r) {
        if (r <= 1.0) return rho1;
        return std::pow(r, 2.0 - 2.0 * Dd) * (1.0 + c0 * std::pow(r, 1.0 - Dd));
    };
    pot.mass_closed = [c0, Dd, rho1](double s) {
        if (s <= 1.0) return rho1 * std::pow(s, Dd) / Dd;
        const double head = rho1 / Dd;
        const double base = (1.0 - std::pow(s, 2.0 - Dd)) / (Dd - 2.0);
        const double corr =
            c0 * (1.0 - std::pow(s, 3.0 - 2.0 * Dd)) / (2.0 * Dd - 3.0);
        return head + base + corr;
    };
    return pot;
}

RadialPotential make_smooth(const detail::KeyParts& parts, int D) {
    const double alpha = detail::require_number(parts, "alpha");
    if (!(alpha > 2.0))
        throw std::invalid_argument("smooth density requires alpha > 2");
    RadialPotential pot;
    pot.key = parts.name + ":alpha=" + std::to_string(alpha);
    pot.D = D;
    pot.alpha = alpha;
    pot.regular_at_zero = true;
    pot.rho = [alpha](double r) {
        return std::pow(1.0 + r * r, -alpha / 2.0);
    };
    return pot;
}

/// Integrand of the potential integral, with the removable s -> 0 limit.
num::Fn shell_integrand(const RadialPotential& pot) {
    const RadialPotential* p = &pot;
    const double Dd = static_cast<double>(pot.D);
    return [p, Dd](double s) {
        if (s <= 0.0) return 0.0;
        return std::pow(s, 1.0 - Dd) * mass(*p, s);
    };
}

HrhoResult hrho_cached(const RadialPotential& pot, double rel_tol) {
    if (pot.cache) {
        std::lock_guard<std::mutex> lock(pot.cache->mu);
        if (pot.cache->hrho_state != 0) {
            HrhoResult out;
            out.kind = pot.cache->hrho_state == 1 ? num::Convergence::Finite
                                                  : num::Convergence::Divergent;
            out.value = pot.cache->hrho_value;
            out.abs_err = pot.cache->hrho_err;
            return out;
        }
    }
    const num::Fn& rho = pot.rho;
    const auto head = num::integrate(
        [&rho](double r) { return r * rho(r); }, 0.0, 1.0, rel_tol * 0.1);
    const auto tail = num::integrate_to_infinity(
        [&rho](double r) { return r * rho(r); }, 1.0,
        std::max(rel_tol, 1e-12));
    HrhoResult out;
    if (tail.kind == num::Convergence::Divergent) {
        out.kind = num::Convergence::Divergent;
    } else {
        out.kind = num::Convergence::Finite;
        out.value = head.value + tail.value;
        out.abs_err = head.abs_err + tail.abs_err;
    }
    if (pot.cache) {
        std::lock_guard<std::mutex> lock(pot.cache->mu);
        pot.cache->hrho_state = out.kind == num::Convergence::Finite ? 1 : -1;
        pot.cache->hrho_value = out.value;
        pot.cache->hrho_err = out.abs_err;
    }
    return out;
}

}  // namespace

RadialPotential make_potential(const std::string& key, int D) {
    if (D < 3) throw std::invalid_argument("radial densities require D >= 3");
    const auto parts = detail::parse_key(key);
    RadialPotential pot;
    if (parts.name == "model") {
        pot = make_model(parts, D);
    } else if (parts.name == "perturbed") {
        pot = make_perturbed(parts, D);
    } else if (parts.name == "smooth") {
        pot = make_smooth(parts, D);
    } else {
        throw std::invalid_argument("unknown density family '" + parts.name +
                                    "'");
    }
    pot.cache = std::make_shared<MassCache>();
    pot.cache->pts.emplace_back(0.0, 0.0);
    validate_positive(pot);
    if (pot.sigma) validate_perturbation(pot);
    return pot;
}

EllipsoidPotential make_ellipsoid_potential(const std::string& key) {
    const auto parts = detail::parse_key(key);
    if (parts.name != "ellipsoid")
        throw std::invalid_argument("expected an ellipsoid key, got '" +
                                    parts.name + "'");
    EllipsoidPotential pot;
    pot.a = detail::require_number(parts, "a");
    pot.alpha = detail::require_number(parts, "alpha");
    pot.D = static_cast<int>(detail::require_number(parts, "D"));
    if (!(pot.a > 0.0 && pot.a <= 1.0))
        throw std::invalid_argument("ellipsoid flattening must lie in (0, 1]");
    if (!(pot.alpha > 2.0))
        throw std::invalid_argument("ellipsoid exponent must exceed 2");
    if (pot.D < 3) throw std::invalid_argument("ellipsoid requires D >= 3");
    return pot;
}

HrhoResult check_Hrho(const RadialPotential& pot, double rel_tol) {
    if (!pot.rho) throw std::invalid_argument("density has no rho function");
    return hrho_cached(pot, rel_tol);
}

double mass(const RadialPotential& pot, double s) {
    if (s <= 0.0) return 0.0;
    if (pot.mass_closed) return pot.mass_closed(s);
    if (!pot.cache) {
        const double Dd = static_cast<double>(pot.D);
        const num::Fn& rho = pot.rho;
        return num::integrate(
                   [&rho, Dd](double t) { return std::pow(t, Dd - 1.0) * rho(t); },
                   0.0, s, 1e-12)
            .value;
    }
    std::lock_guard<std::mutex> lock(pot.cache->mu);
    auto& pts = pot.cache->pts;
    // Largest checkpoint at or below s.
    auto it = std::upper_bound(
        pts.begin(), pts.end(), s,
        [](double v, const std::pair<double, double>& q) { return v < q.first; });
    const auto& base = *(it - 1);
    if (base.first == s) return base.second;
    const double Dd = static_cast<double>(pot.D);
    const num::Fn& rho = pot.rho;
    const auto inc = num::integrate(
        [&rho, Dd](double t) { return std::pow(t, Dd - 1.0) * rho(t); },
        base.first, s, 1e-13);
    const double m = base.second + inc.value;
    pts.insert(it, {s, m});
    return m;
}

double newtonian_potential(const RadialPotential& pot, double r,
                           double rel_tol) {
    if (!(r >= 0.0)) throw std::invalid_argument("radius must be nonnegative");
    const auto hr = check_Hrho(pot);
    if (hr.kind == num::Convergence::Divergent)
        throw std::invalid_argument(
            "density '" + pot.key +
            "' has a divergent r*rho integral: no decaying potential exists");
    const auto g = shell_integrand(pot);
    double head = 0.0;
    double start = r;
    if (r < 1.0) {
        head = num::integrate(g, r, 1.0, rel_tol * 0.1).value;
        start = 1.0;
    }
    const auto tail = num::integrate_to_infinity(g, start, rel_tol);
    if (tail.kind == num::Convergence::Divergent)
        throw numerical_error("potential integral failed to converge for '" +
                              pot.key + "'");
    return head + tail.value;
}

std::vector<double> newtonian_potential_grid(const RadialPotential& pot,
                                             const std::vector<double>& r,
                                             double rel_tol) {
    if (r.empty()) return {};
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
        if (!(r[i] < r[i + 1]))
            throw std::invalid_argument("potential grid must be ascending");
    if (!(r.front() >= 0.0))
        throw std::invalid_argument("potential grid must be nonnegative");
    std::vector<double> U(r.size());
    U.back() = newtonian_potential(pot, r.back(), rel_tol);
    const auto g = shell_integrand(pot);
    for (std::size_t i = r.size() - 1; i-- > 0;) {
        const auto inc = num::integrate(g, r[i], r[i + 1], rel_tol * 0.1);
        U[i] = U[i + 1] + inc.value;
    }
    return U;
}

EllipsoidCriterion ellipsoid_criterion(double a, double alpha, int D) {
    if (!(a > 0.0 && a <= 1.0))
        throw std::invalid_argument("flattening must lie in (0, 1]");
    if (!(alpha > 2.0)) throw std::invalid_argument("exponent must exceed 2");
    if (D < 3) throw std::invalid_argument("criterion requires D >= 3");
    const double cap = a * a * (2.0 * D - 2.0);
    EllipsoidCriterion out;
    out.meanc_holds = alpha <= cap;
    out.monotone_holds = alpha + 2.0 <= cap;
    return out;
}

double mean_curvature_margin(const EllipsoidPotential& pot, double level,
                             int samples) {
    if (!(level > 0.0) || !std::isfinite(level))
        throw std::invalid_argument("level must be a positive density value");
    if (samples < 16)
        throw std::invalid_argument("level-set scan needs at least 16 samples");
    const double a = pot.a;
    const double alpha = pot.alpha;
    const double Dd = static_cast<double>(pot.D);
    // Level set rho = level is the ellipsoid v = ell.
    const double ell = std::pow(level, -2.0 / alpha);
    const double inv_sqrt_ell = 1.0 / std::sqrt(ell);

    // By rotational symmetry in x' the margin depends on one angle. Writing a
    // level-set point as (a sqrt(ell) cos t, sqrt(ell) sin t, 0, ...), the
    // exact quadric curvature gives
    //   margin(t) = [2(1/a^2 + D - 1)/sqrt(g) - 2h/g^{3/2} - alpha sqrt(g)]
    //               / sqrt(ell),
    // with g = cos^2/a^2 + sin^2 and h = cos^2/a^4 + sin^2.
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < samples; ++j) {
        const double t =
            (kPi / 2.0) * static_cast<double>(j) / static_cast<double>(samples - 1);
        const double c = std::cos(t);
        const double s = std::sin(t);
        const double g = c * c / (a * a) + s * s;
        const double h = c * c / (a * a * a * a) + s * s;
        const double sqg = std::sqrt(g);
        const double m =
            (2.0 * (1.0 / (a * a) + Dd - 1.0) / sqg - 2.0 * h / (g * sqg) -
             alpha * sqg) *
            inv_sqrt_ell;
        best = std::min(best, m);
    }
    return best;
}

}  // namespace elslab::pot
