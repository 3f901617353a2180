#include "elslab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "elslab/detail/keyparse.hpp"
#include "elslab/errors.hpp"

namespace elslab::nonlin {

namespace {

constexpr double kE = 2.718281828459045235360287471353;
constexpr double kInf = std::numeric_limits<double>::infinity();

Nonlinearity make_power(double p, double scale) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw std::invalid_argument("power nonlinearity requires p >= 1");
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("power nonlinearity requires scale > 0");
    Nonlinearity nl;
    nl.key = "power:p=" + std::to_string(p) +
             (scale == 1.0 ? "" : ",scale=" + std::to_string(scale));
    nl.f = [p, scale](double u) {
        return scale * std::pow(std::max(u, 0.0), p);
    };
    nl.fprime = [p, scale](double u) {
        return scale * p * std::pow(std::max(u, 0.0), p - 1.0);
    };
    nl.F_closed = [p, scale](double u) {
        return scale * std::pow(std::max(u, 0.0), p + 1.0) / (p + 1.0);
    };
    nl.F_floor = *nl.F_closed;  // already smooth: the floor is exact
    nl.monotone_from = 0.0;
    return nl;
}

Nonlinearity make_oscillating() {
    Nonlinearity nl;
    nl.key = "oscillating";
    nl.f = [](double u) { return u * u * (1.0 + std::cos(u)); };
    nl.fprime = [](double u) {
        return 2.0 * u * (1.0 + std::cos(u)) - u * u * std::sin(u);
    };
    nl.F_closed = [](double u) {
        return u * u * u / 3.0 + u * u * std::sin(u) + 2.0 * u * std::cos(u) -
               2.0 * std::sin(u);
    };
    // |u^2 sin u + 2u cos u - 2 sin u| <= u^2 + 2u + 2, so the cubic core
    // minus that envelope is a smooth global lower bound for F.
    nl.F_floor = [](double u) {
        u = std::max(u, 0.0);
        return u * u * u / 3.0 - u * u - 2.0 * u - 2.0;
    };
    nl.monotone_from = kInf;  // touches zero at every odd multiple of pi
    return nl;
}

Nonlinearity make_logquartic() {
    Nonlinearity nl;
    nl.key = "logquartic";
    // u (ln u)^4 above u = e; positive power extension u^5 / e^4 below,
    // continuous at e and increasing on both pieces.
    nl.f = [](double u) {
        u = std::max(u, 0.0);
        if (u < kE) return u * u * u * u * u / (kE * kE * kE * kE);
        const double L = std::log(u);
        return u * L * L * L * L;
    };
    nl.fprime = [](double u) {
        u = std::max(u, 0.0);
        if (u < kE) return 5.0 * u * u * u * u / (kE * kE * kE * kE);
        const double L = std::log(u);
        return L * L * L * (L + 4.0);
    };
    nl.F_closed = [](double u) {
        u = std::max(u, 0.0);
        if (u < kE) return u * u * u * u * u * u / (6.0 * kE * kE * kE * kE);
        const double L = std::log(u);
        const double poly = L * L * L * L - 2.0 * L * L * L + 3.0 * L * L -
                            3.0 * L + 1.5;
        return -kE * kE / 12.0 + 0.5 * u * u * poly;
    };
    nl.F_floor = *nl.F_closed;
    nl.monotone_from = 0.0;
    return nl;
}

Nonlinearity make_exponential() {
    Nonlinearity nl;
    nl.key = "exponential";
    nl.f = [](double u) { return std::expm1(u); };
    nl.fprime = [](double u) { return std::exp(u); };
    nl.F_closed = [](double u) { return std::expm1(u) - u; };
    nl.F_floor = *nl.F_closed;
    nl.monotone_from = 0.0;
    return nl;
}

Nonlinearity make_shifted(const std::string& base_key, double tk) {
    if (!(tk >= 0.0) || !std::isfinite(tk))
        throw std::invalid_argument("shifted nonlinearity requires tk >= 0");
    Nonlinearity base = make_nonlinearity(base_key);
    Nonlinearity nl;
    nl.key = "shifted:base=" + base_key + ",tk=" + std::to_string(tk);
    auto bf = base.f;
    nl.f = [bf, tk](double u) { return bf(std::max(u, 0.0) + tk); };
    auto bfp = base.fprime;
    nl.fprime = [bfp, tk](double u) { return bfp(std::max(u, 0.0) + tk); };
    if (base.F_closed) {
        auto bF = *base.F_closed;
        const double F_tk = bF(tk);
        nl.F_closed = [bF, tk, F_tk](double u) {
            return bF(std::max(u, 0.0) + tk) - F_tk;
        };
        if (base.F_floor) {
            auto bFloor = *base.F_floor;
            nl.F_floor = [bFloor, tk, F_tk](double u) {
                return bFloor(std::max(u, 0.0) + tk) - F_tk;
            };
            nl.F_floor_from = std::max(0.0, base.F_floor_from - tk);
        }
    }
    nl.monotone_from = std::isfinite(base.monotone_from)
                           ? std::max(0.0, base.monotone_from - tk)
                           : kInf;
    const double probe = std::max(1.0, tk);
    nl.vanishes_at_zero = std::abs(base.f(tk)) <= 1e-9 * std::max(1.0, base.f(probe));
    return nl;
}

}  // namespace

Nonlinearity make_nonlinearity(const std::string& key) {
    const auto parts = detail::parse_key(key);
    if (parts.name == "power") {
        double scale = 1.0;
        if (parts.params.count("scale"))
            scale = detail::require_number(parts, "scale");
        return make_power(detail::require_number(parts, "p"), scale);
    }
    if (parts.name == "oscillating") return make_oscillating();
    if (parts.name == "logquartic") return make_logquartic();
    if (parts.name == "exponential") return make_exponential();
    if (parts.name == "shifted")
        return make_shifted(detail::require_string(parts, "base"),
                            detail::require_number(parts, "tk"));
    throw std::invalid_argument("unknown nonlinearity key: '" + key + "'");
}

double eval_F(const Nonlinearity& nl, double u, double rel_tol) {
    if (!(u >= 0.0))
        throw std::invalid_argument("eval_F: u must be nonnegative");
    if (nl.F_closed) return (*nl.F_closed)(u);
    if (u == nl.F_origin) return 0.0;
    auto q = num::integrate(nl.f, nl.F_origin, u, rel_tol);
    if (!q.converged)
        throw numerical_error("eval_F: quadrature did not converge for '" +
                              nl.key + "'");
    return q.value;
}

KOResult ko_integral(const Nonlinearity& nl, double lower, double rel_tol) {
    if (!(lower > 0.0) || !std::isfinite(lower))
        throw std::invalid_argument("ko_integral: lower must be positive and finite");
    const double F_low = eval_F(nl, lower);
    if (!(F_low > 0.0))
        throw std::invalid_argument(
            "ko_integral: F(lower) must be positive (lower too small for '" +
            nl.key + "')");

    auto integrand = [&nl](double s) {
        const double F = eval_F(nl, s);
        return F > 0.0 ? 1.0 / std::sqrt(F) : 0.0;
    };
    auto imp = num::integrate_to_infinity(integrand, lower, rel_tol);

    KOResult out;
    out.tail_exponent = imp.tail.exponent;
    if (imp.kind == num::Convergence::Divergent) {
        out.kind = num::Convergence::Divergent;
        out.value = kInf;
        return out;
    }
    out.value = imp.value;
    out.abs_err = imp.abs_err;
    out.truncation = imp.truncation;
    return out;
}

double phi(const Nonlinearity& nl, double u, double rel_tol) {
    if (!std::isfinite(nl.monotone_from))
        throw std::invalid_argument(
            "phi: '" + nl.key + "' has no strictly increasing tail");
    if (!(u >= nl.monotone_from))
        throw std::invalid_argument("phi: u below the monotone threshold");
    const double S = eval_F(nl, u);
    if (!(S > 0.0))
        throw std::invalid_argument("phi: F(u) must be positive");

    // Phi(u) = 2 sqrt(S) int_0^inf dtau / f(F^{-1}(S (1 + tau^2))).
    const double root_S = std::sqrt(S);
    auto integrand = [&nl, S, root_S](double tau) {
        const double target = S * (1.0 + tau * tau);
        const double t = F_inverse(nl, target);
        const double ft = nl.f(t);
        return ft > 0.0 ? 2.0 * root_S / ft : 0.0;
    };

    auto head = num::integrate(integrand, 0.0, 1.0,
                               std::max(1e-13, rel_tol * 1e-3));
    auto tail = num::integrate_to_infinity(integrand, 1.0, rel_tol);
    if (tail.kind == num::Convergence::Divergent)
        throw numerical_error("phi: integral diverges for '" + nl.key +
                              "' at u = " + std::to_string(u));
    if (!head.converged)
        throw numerical_error("phi: quadrature failure for '" + nl.key + "'");
    return head.value + tail.value;
}

double phi_inverse(const Nonlinearity& nl, double y, double rel_tol) {
    if (!(y > 0.0) || !std::isfinite(y))
        throw std::invalid_argument("phi_inverse: y must be positive and finite");
    const double u_min =
        std::isfinite(nl.monotone_from) ? nl.monotone_from : kInf;
    if (!std::isfinite(u_min))
        throw std::invalid_argument(
            "phi_inverse: '" + nl.key + "' has no strictly increasing tail");

    // Phi is strictly decreasing; bracket y between phi(lo) and phi(hi).
    double lo = std::max(u_min, 1e-8);
    if (nl.f(u_min) > 0.0 && u_min > 0.0) lo = u_min;
    double f_lo = phi(nl, lo, rel_tol);
    int guard = 0;
    while (f_lo < y) {
        lo *= 0.25;
        if (lo < 1e-300 || ++guard > 260)
            throw numerical_error("phi_inverse: y above the range of phi");
        if (lo < u_min) {
            lo = u_min;
            f_lo = phi(nl, lo, rel_tol);
            if (f_lo < y)
                throw numerical_error(
                    "phi_inverse: y above the range of phi on the monotone tail");
            break;
        }
        f_lo = phi(nl, lo, rel_tol);
    }
    double hi = std::max(2.0 * lo, 1.0);
    double f_hi = phi(nl, hi, rel_tol);
    guard = 0;
    while (f_hi > y) {
        hi *= 4.0;
        if (hi > 1e300 || ++guard > 260)
            throw numerical_error("phi_inverse: y below the range of phi");
        f_hi = phi(nl, hi, rel_tol);
    }

    auto g = [&](double u) { return phi(nl, u, rel_tol * 0.1) - y; };
    const double u = num::invert_monotone(g, lo, hi, 1e-12);
    return u;
}

double F_inverse(const Nonlinearity& nl, double s, double rel_tol) {
    if (!(s >= 0.0))
        throw std::invalid_argument("F_inverse: s must be nonnegative");
    if (s == 0.0) return nl.F_origin;

    // Bracket [0, hi] with F(hi) >= s, then safeguarded Newton.
    double hi = 1.0;
    int guard = 0;
    while (eval_F(nl, hi) < s) {
        hi *= 4.0;
        if (hi > 1e306 || ++guard > 520)
            throw std::invalid_argument("F_inverse: s exceeds the range of F");
    }
    double lo = nl.F_origin;
    double u = std::min(hi, std::max(lo + 0.5 * (hi - lo), 1e-12));
    for (int it = 0; it < 200; ++it) {
        const double Fu = eval_F(nl, u) - s;
        if (Fu > 0.0)
            hi = u;
        else
            lo = u;
        const double fu = nl.f(u);
        double next = fu > 0.0 ? u - Fu / fu : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - u) <= rel_tol * std::max(1e-300, std::abs(u))) {
            u = next;
            break;
        }
        u = next;
    }
    return u;
}

namespace {

// Lazily built conservative majorant grid. Node i holds the running
// supremum of f over [0, t_{i+1}] (one-cell lookahead), so the linear
// interpolant between nodes dominates f everywhere sampled.
struct EnvelopeData {
    Nonlinearity base;
    double eps = 0.0;
    std::mutex mu;
    std::vector<double> t;    // node positions, t[0] = 0
    std::vector<double> sup;  // conservative sup of f over [0, t[i+1]]
    double built_to = 0.0;

    static constexpr int kCellsPerWindow = 1024;
    static constexpr int kSamplesPerCell = 8;

    // Conservative supremum of f over [a, b]: sampled maximum plus a
    // curvature pad from the largest second difference.
    double cell_sup(double a, double b) const {
        const double d = (b - a) / kSamplesPerCell;
        double ys[kSamplesPerCell + 1];
        double peak = -kInf;
        for (int j = 0; j <= kSamplesPerCell; ++j) {
            ys[j] = base.f(a + d * j);
            peak = std::max(peak, ys[j]);
        }
        double dd = 0.0;
        for (int j = 1; j < kSamplesPerCell; ++j)
            dd = std::max(dd, std::abs(ys[j + 1] - 2.0 * ys[j] + ys[j - 1]));
        return peak + 1.5 * dd / 8.0;
    }

    void append_window(double a, double b) {
        const double h = (b - a) / kCellsPerWindow;
        double running = sup.empty() ? 0.0 : sup.back();
        for (int i = 0; i < kCellsPerWindow; ++i) {
            const double ca = a + h * i;
            running = std::max(running, cell_sup(ca, ca + h));
            t.push_back(ca);
            sup.push_back(running);
        }
        built_to = b;
    }

    // Ensures nodes cover [0, T] plus one lookahead cell.
    void extend(double T) {
        while (built_to < std::max(T * 1.01, 1e-300) || t.size() < 2) {
            if (built_to <= 0.0)
                append_window(0.0, 1.0);
            else
                append_window(built_to, 2.0 * built_to);
            if (built_to > 1e280)
                throw numerical_error("monotone envelope: domain overflow");
        }
    }

    // Core (running-sup) part. Cell i spans [t[i], t[i+1]] and interpolates
    // from sup[i] (covering [0, t[i+1]]) to sup[i+1] (covering one cell
    // further), so the value anywhere in the cell dominates the supremum of
    // f up to that point. Cell 0 is anchored at zero to keep fbar(0) = 0;
    // the catalog nonlinearities vanish at least linearly there, which the
    // anchored chord still dominates.
    std::size_t cell_of(double x) const {
        const auto it = std::upper_bound(t.begin(), t.end(), x);
        std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
        return std::min(i, t.size() - 2);
    }

    double node_value(std::size_t i) const {
        if (i == 0) return 0.0;
        return sup[std::min(i, sup.size() - 1)];
    }

    double core(double x) {
        extend(x);
        const std::size_t i = cell_of(x);
        const double t0 = t[i], t1 = t[i + 1];
        const double v0 = node_value(i), v1 = node_value(i + 1);
        const double w = (x - t0) / (t1 - t0);
        return v0 + (v1 - v0) * w;
    }

    double core_slope(double x) {
        extend(x);
        const std::size_t i = cell_of(x);
        return (node_value(i + 1) - node_value(i)) / (t[i + 1] - t[i]);
    }

    // --- integral of 1 / fbar ------------------------------------------
    // Adaptive quadrature over the whole envelope is wasteful: the
    // interpolant has a kink at every node, so a generic splitter burns
    // its interval budget rediscovering the grid. Within one cell the
    // integrand is smooth, so a single 15-point panel per cell is
    // effectively exact; a lazily grown prefix sum then answers any
    // int_a^b ds/fbar in O(1) panels.

    std::vector<double> cum;   // cum[i] = int_{t[1]}^{t[i]} ds / fbar
    double split_pin = -1.0;   // frontier the improper tail hangs off
    double tail_pin = 0.0;     // int_{split_pin}^inf ds / fbar

    // Envelope value at an already-covered point; never extends the grid,
    // so quadrature over built cells cannot trigger window appends (whose
    // lookahead would otherwise chase its own sample points forever).
    double fbar_covered(double x) const {
        x = std::clamp(x, 0.0, built_to);
        const std::size_t i = cell_of(x);
        const double v0 = node_value(i), v1 = node_value(i + 1);
        const double frac = (x - t[i]) / (t[i + 1] - t[i]);
        const double corev = v0 + (v1 - v0) * frac;
        return corev + eps * (std::min(x, 1.0) + std::log1p(x));
    }

    // One Gauss-Kronrod panel of 1/fbar over [a, b] inside a single cell.
    double panel(double a, double b) const {
        auto g = [this](double s) {
            const double v = fbar_covered(s);
            return v > 0.0 ? 1.0 / v : 0.0;
        };
        return num::integrate(g, a, b, 1e-12, 0.0, 1).value;
    }

    // Makes cum valid through node index n (cells fully inside coverage).
    void ensure_cum(std::size_t n) {
        if (cum.size() < 2) cum.assign(2, 0.0);
        while (cum.size() <= n) {
            const std::size_t i = cum.size() - 1;
            cum.push_back(cum.back() + panel(t[i], t[i + 1]));
        }
    }

    // int_{t[1]}^{x} ds / fbar for t[1] <= x <= built_to (already extended).
    double cum_at(double x) {
        const std::size_t i = std::max<std::size_t>(cell_of(x), 1);
        ensure_cum(i);
        const double partial = x > t[i] ? panel(t[i], x) : 0.0;
        return cum[i] + partial;
    }

    // int_w^x ds / fbar, 0 < w <= x. The first cell is handled with a
    // logarithmic substitution because 1/fbar blows up like 1/x there.
    double int_from(double w, double x) {
        if (!(w > 0.0))
            throw numerical_error("monotone envelope: 1/fbar integral from 0");
        if (!(x > w)) return 0.0;
        extend(x);
        const double t1 = t[1];
        double total = 0.0;
        if (w < t1) {
            const double hi = std::min(x, t1);
            const double L = std::log(hi / w);
            auto g = [this, w, L](double th) {
                const double s = w * std::exp(L * th);
                const double v = fbar_covered(s);
                return v > 0.0 ? L * s / v : 0.0;
            };
            total += num::integrate(g, 0.0, 1.0, 1e-12, 0.0, 64).value;
            if (x <= t1) return total;
            w = t1;
        }
        return total + cum_at(x) - cum_at(w);
    }

    // int_w^inf ds / fbar. The improper piece is computed once, hanging off
    // a split pinned at the first call's frontier; pinning matters because
    // the tail quadrature itself extends the grid far outward, and re-keying
    // the split to the new frontier would escalate geometrically call after
    // call. Queries on either side of the pin reduce to prefix sums.
    double int_to_inf(double w) {
        if (split_pin < 0.0) {
            extend(std::max(2.0 * w, 2.0));
            const double split = built_to;
            auto g = [this](double s) {
                extend(s);  // improper tail probes beyond the frontier
                const double v = fbar_covered(s);
                return v > 0.0 ? 1.0 / v : 0.0;
            };
            auto res = num::integrate_to_infinity(g, split, 1e-11);
            if (res.kind == num::Convergence::Divergent)
                throw numerical_error(
                    "monotone envelope: tail integral of 1/fbar diverges "
                    "(subcritical growth of '" + base.key + "')");
            tail_pin = res.value;
            split_pin = split;
        }
        if (w <= split_pin) return int_from(w, split_pin) + tail_pin;
        return tail_pin - int_from(split_pin, w);
    }
};

}  // namespace

Nonlinearity monotone_envelope(const Nonlinearity& nl, double eps_scale) {
    if (!(eps_scale > 0.0))
        throw std::invalid_argument("monotone_envelope: eps_scale must be positive");
    if (!nl.vanishes_at_zero)
        throw std::invalid_argument(
            "monotone_envelope: '" + nl.key +
            "' does not vanish at zero, no increasing majorant with fbar(0)=0 exists");
    auto data = std::make_shared<EnvelopeData>();
    data->base = nl;
    const double f1 = nl.f(1.0);
    data->eps = eps_scale * (f1 > 0.0 ? f1 : 1.0);

    Nonlinearity env;
    env.key = nl.key + "#envelope";
    env.monotone_from = 0.0;
    env.vanishes_at_zero = true;
    const double eps = data->eps;
    env.f = [data, eps](double x) {
        x = std::max(x, 0.0);
        std::scoped_lock lock(data->mu);
        return data->core(x) + eps * (std::min(x, 1.0) + std::log1p(x));
    };
    env.fprime = [data, eps](double x) {
        x = std::max(x, 0.0);
        std::scoped_lock lock(data->mu);
        return data->core_slope(x) + eps * ((x < 1.0 ? 1.0 : 0.0) + 1.0 / (1.0 + x));
    };
    env.inv_integral = [data](double a, double b) {
        std::scoped_lock lock(data->mu);
        if (std::isinf(b)) return data->int_to_inf(a);
        if (b >= a) return data->int_from(a, b);
        return -data->int_from(b, a);
    };
    return env;
}

double envelope_tail_inverse(const Nonlinearity& fbar, double beta,
                             double target, double rel_tol) {
    if (!(target > 0.0) || !std::isfinite(target))
        throw std::invalid_argument("envelope_tail_inverse: target must be positive");
    if (!(beta > 0.0))
        throw std::invalid_argument("envelope_tail_inverse: beta must be positive");

    auto inv = [&fbar](double s) {
        const double v = fbar.f(s);
        return v > 0.0 ? 1.0 / v : 0.0;
    };

    // T(w) = int_w^beta ds / fbar(s), strictly decreasing in w.
    auto T = [&](double w) {
        if (fbar.inv_integral) return (*fbar.inv_integral)(w, beta);
        if (std::isfinite(beta)) {
            return num::integrate(inv, w, beta, std::max(1e-13, rel_tol * 1e-2))
                .value;
        }
        const double split = std::max(2.0 * w, 1.0);
        double head = 0.0;
        if (split > w)
            head = num::integrate(inv, w, split, std::max(1e-13, rel_tol * 1e-2))
                       .value;
        auto tail = num::integrate_to_infinity(inv, split, rel_tol * 0.1);
        if (tail.kind == num::Convergence::Divergent)
            throw numerical_error(
                "envelope_tail_inverse: tail integral of 1/envelope diverges "
                "(subcritical growth of '" + fbar.key + "')");
        return head + tail.value;
    };

    // Bracket: T(lo) >= target >= T(hi).
    double hi = std::isfinite(beta) ? beta : 1.0;
    if (!std::isfinite(beta)) {
        int guard = 0;
        while (T(hi) > target) {
            hi *= 4.0;
            if (hi > 1e290 || ++guard > 250)
                throw numerical_error("envelope_tail_inverse: target below range");
        }
    }
    double lo = std::isfinite(beta) ? 0.5 * beta : 0.25 * hi;
    int guard = 0;
    while (T(lo) < target) {
        lo *= 0.25;
        if (lo < 1e-290 || ++guard > 250)
            throw numerical_error("envelope_tail_inverse: target above range "
                                  "(integral to 0+ saturates)");
    }

    auto g = [&](double w) { return T(w) - target; };
    double w = num::invert_monotone(g, lo, hi, 1e-12);
    // Newton polish: T'(w) = -1/fbar(w).
    for (int it = 0; it < 3; ++it) {
        const double r = T(w) - target;
        const double step = r * fbar.f(w);
        const double next = w + step;
        if (!(next > 0.0) || !std::isfinite(next)) break;
        w = std::min(next, std::isfinite(beta) ? beta : next);
        if (std::abs(step) <= 1e-15 * w) break;
    }
    return w;
}

}  // namespace elslab::nonlin
