#include "elslab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "elslab/errors.hpp"

namespace elslab::num {

namespace {

// Gauss–Kronrod (7,15) nodes and weights on [-1,1], positive half.
constexpr double kronrod_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
};

constexpr double kronrod_weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};

// Embedded Gauss-7 weights; its nodes are the odd-index Kronrod nodes.
constexpr double gauss_weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

struct Panel {
    double a, b;
    double value;
    double err;
};

// One Gauss–Kronrod (7,15) evaluation with the QUADPACK error heuristic.
Panel gk15(const Fn& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kronrod_nodes[i]);
        fv[14 - i] = f(c + h * kronrod_nodes[i]);
    }
    fv[7] = f(c);

    double resk = 0.0, resabs = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double w = kronrod_weights[i];
        if (i == 7) {
            resk += w * fv[7];
            resabs += w * std::abs(fv[7]);
        } else {
            resk += w * (fv[i] + fv[14 - i]);
            resabs += w * (std::abs(fv[i]) + std::abs(fv[14 - i]));
        }
    }
    double resg = gauss_weights[3] * fv[7];
    for (int i = 0; i < 3; ++i) {
        const double w = gauss_weights[i];
        resg += w * (fv[2 * i + 1] + fv[13 - 2 * i]);
    }

    const double reskh = 0.5 * resk;
    double resasc = kronrod_weights[7] * std::abs(fv[7] - reskh);
    for (int i = 0; i < 7; ++i) {
        resasc += kronrod_weights[i] *
                  (std::abs(fv[i] - reskh) + std::abs(fv[14 - i] - reskh));
    }
    resasc *= std::abs(h);

    double err = std::abs((resk - resg) * h) * 200.0;
    if (resasc != 0.0 && err != 0.0) {
        err = resasc * std::min(1.0, std::pow(err / resasc, 1.5));
    }

    return {a, b, resk * h, err};
}

}  // namespace

QuadResult integrate(const Fn& f, double a, double b, double rel_tol,
                     double abs_tol, int max_intervals) {
    QuadResult out;
    if (a == b) return out;

    std::vector<Panel> panels;
    panels.push_back(gk15(f, a, b));
    out.evaluations = 15;

    auto totals = [&panels]() {
        double v = 0.0, e = 0.0;
        for (const auto& p : panels) {
            v += p.value;
            e += p.err;
        }
        return std::pair{v, e};
    };

    while (true) {
        auto [value, err] = totals();
        if (!std::isfinite(value) || !std::isfinite(err)) {
            out.value = value;
            out.abs_err = std::numeric_limits<double>::infinity();
            out.converged = false;
            return out;
        }
        if (err <= std::max(rel_tol * std::abs(value), abs_tol)) {
            out.value = value;
            out.abs_err = err;
            return out;
        }
        if (static_cast<int>(panels.size()) >= max_intervals) {
            out.value = value;
            out.abs_err = err;
            out.converged = false;
            return out;
        }
        auto worst = std::max_element(
            panels.begin(), panels.end(),
            [](const Panel& x, const Panel& y) { return x.err < y.err; });
        const double pa = worst->a, pb = worst->b;
        const double mid = 0.5 * (pa + pb);
        if (mid <= pa || mid >= pb) {
            // Interval is at floating-point resolution; freeze its estimate.
            worst->err = 0.0;
            continue;
        }
        *worst = gk15(f, pa, mid);
        panels.push_back(gk15(f, mid, pb));
        out.evaluations += 30;
    }
}

namespace {

// Least-squares fit ln g = c0 - q ln s; returns {q, rms residual}.
std::pair<double, double> fit_power(const std::vector<double>& ls,
                                    const std::vector<double>& lg) {
    const std::size_t n = ls.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += ls[i];
        sy += lg[i];
        sxx += ls[i] * ls[i];
        sxy += ls[i] * lg[i];
    }
    const double det = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / det;
    const double icept = (sy - slope * sx) / n;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = lg[i] - (icept + slope * ls[i]);
        rss += r * r;
    }
    return {-slope, std::sqrt(rss / n)};
}

// Least-squares fit ln g = c0 - q ln s - kappa ln ln s.
struct LogFit {
    double q, kappa, c0, rms;
    bool ok;
};

LogFit fit_power_log(const std::vector<double>& ls,
                     const std::vector<double>& lg) {
    const std::size_t n = ls.size();
    LogFit out{0, 0, 0, 0, false};
    if (n < 4) return out;
    // Normal equations for [1, ln s, ln ln s].
    double m[3][3] = {};
    double rhs[3] = {};
    for (std::size_t i = 0; i < n; ++i) {
        if (ls[i] <= 0.0) return out;
        const double b1 = ls[i], b2 = std::log(ls[i]);
        const double row[3] = {1.0, b1, b2};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] += row[r] * row[c];
            rhs[r] += row[r] * lg[i];
        }
    }
    // Gaussian elimination with partial pivoting on the 3x3 system.
    int idx[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[idx[r]][col]) > std::abs(m[idx[piv]][col])) piv = r;
        std::swap(idx[col], idx[piv]);
        const double d = m[idx[col]][col];
        if (std::abs(d) < 1e-300) return out;
        for (int r = col + 1; r < 3; ++r) {
            const double fac = m[idx[r]][col] / d;
            for (int c = col; c < 3; ++c) m[idx[r]][c] -= fac * m[idx[col]][c];
            rhs[idx[r]] -= fac * rhs[idx[col]];
        }
    }
    double sol[3];
    for (int r = 2; r >= 0; --r) {
        double acc = rhs[idx[r]];
        for (int c = r + 1; c < 3; ++c) acc -= m[idx[r]][c] * sol[c];
        sol[r] = acc / m[idx[r]][r];
    }
    out.c0 = sol[0];
    out.q = -sol[1];
    out.kappa = -sol[2];
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double fitted = sol[0] + sol[1] * ls[i] + sol[2] * std::log(ls[i]);
        const double r = lg[i] - fitted;
        rss += r * r;
    }
    out.rms = std::sqrt(rss / n);
    out.ok = std::isfinite(out.q) && std::isfinite(out.kappa);
    return out;
}

}  // namespace

ImproperResult integrate_to_infinity(const Fn& g, double a, double rel_tol,
                                     int max_windows) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw std::invalid_argument("integrate_to_infinity: lower limit must be positive and finite");

    ImproperResult out;
    const double win_rel = std::max(1e-13, rel_tol * 1e-3);

    double acc = 0.0, err_acc = 0.0;
    std::vector<double> mid_s, mid_g, win_int, totals;
    double s_lo = a;
    int divergent_streak = 0;

    for (int k = 0; k < max_windows; ++k) {
        const double s_hi = 2.0 * s_lo;
        // The abs_tol floor keeps the splitter from chasing integrand
        // ripples whose net contribution is below the requested accuracy.
        const double win_abs = 0.02 * rel_tol * std::abs(acc);
        QuadResult w = integrate(g, s_lo, s_hi, win_rel, win_abs, 240);
        out.evaluations += w.evaluations;
        acc += w.value;
        err_acc += w.abs_err;

        const double s_mid = s_lo * 1.4142135623730951;  // geometric midpoint
        const double g_mid = g(s_mid);
        out.evaluations += 1;
        mid_s.push_back(s_mid);
        mid_g.push_back(g_mid);
        win_int.push_back(w.value);
        out.last_s = s_hi;

        // Vanishing tail (compact support): accept immediately.
        if (mid_s.size() >= 3) {
            const std::size_t n = win_int.size();
            bool dead = true;
            for (std::size_t j = n - 3; j < n; ++j)
                dead = dead && std::abs(win_int[j]) <= 1e-300 + 1e-16 * std::abs(acc) &&
                       mid_g[j] <= 0.0;
            if (dead) {
                out.value = acc;
                out.abs_err = err_acc;
                out.truncation = 0.0;
                return out;
            }
        }

        if (mid_s.size() >= 5) {
            const std::size_t take = std::min<std::size_t>(mid_s.size(), 14);
            std::vector<double> ls, lg;
            ls.reserve(take);
            lg.reserve(take);
            bool usable = true;
            for (std::size_t j = mid_s.size() - take; j < mid_s.size(); ++j) {
                if (!(mid_g[j] > 0.0) || !std::isfinite(mid_g[j])) {
                    usable = false;
                    break;
                }
                ls.push_back(std::log(mid_s[j]));
                lg.push_back(std::log(mid_g[j]));
            }
            if (usable) {
                auto [q, rms] = fit_power(ls, lg);
                TailModel model{q, 0.0, 0.0, false};
                double fit_rms = rms;
                bool all_past_e = mid_s[mid_s.size() - take] > 2.8;
                if (all_past_e && take >= 6) {
                    LogFit lf = fit_power_log(ls, lg);
                    if (lf.ok && lf.rms < rms / 3.0 && std::abs(lf.kappa) < 24.0) {
                        model = {lf.q, lf.kappa, lf.c0, true};
                        fit_rms = lf.rms;
                    }
                }

                // Divergence: decay no faster than 1/s (with at most a
                // non-integrable log correction) sustained over two decades.
                const bool diverging =
                    model.exponent <= 1.0 + 1e-3 &&
                    (!model.log_corrected || model.log_exponent <= 1.0 + 1e-3 ||
                     model.exponent < 1.0 - 1e-3);
                divergent_streak = diverging ? divergent_streak + 1 : 0;
                if (divergent_streak >= 7) {
                    out.kind = Convergence::Divergent;
                    out.value = acc;
                    out.truncation = std::numeric_limits<double>::infinity();
                    out.abs_err = std::numeric_limits<double>::infinity();
                    out.tail = model;
                    return out;
                }

                // Fitted integrand value at the end of the last window.
                auto g_fit_at = [&](double s) {
                    if (model.log_corrected)
                        return std::exp(model.scale - model.exponent * std::log(s) -
                                        model.log_exponent * std::log(std::log(s)));
                    // Pure power: project from the last midpoint sample,
                    // which is less noise-prone than the intercept.
                    return mid_g.back() * std::pow(s / mid_s.back(), -model.exponent);
                };

                double tail = -1.0;
                if (model.exponent > 1.0 + 1e-3) {
                    const double L = std::log(s_hi);
                    tail = g_fit_at(s_hi) * s_hi / (model.exponent - 1.0);
                    if (model.log_corrected) {
                        const double corr = model.log_exponent / ((model.exponent - 1.0) * L);
                        if (corr > -0.9) tail /= (1.0 + corr);
                    }
                } else if (std::abs(model.exponent - 1.0) <= 1e-3 &&
                           model.log_corrected && model.log_exponent > 1.0 + 1e-3) {
                    const double L = std::log(s_hi);
                    tail = g_fit_at(s_hi) * s_hi * L / (model.log_exponent - 1.0);
                }
                if (tail >= 0.0 && std::isfinite(tail)) {
                    const double total = acc + tail;
                    totals.push_back(total);
                    const double target =
                        0.5 * rel_tol * std::max(std::abs(total), 1e-300);
                    // Accept when the model tail itself is negligible, or
                    // when three consecutive tail-corrected totals agree
                    // (the fitted model has stabilized).
                    double spread = std::numeric_limits<double>::infinity();
                    if (totals.size() >= 3) {
                        const auto n = totals.size();
                        const double mx = std::max(
                            {totals[n - 1], totals[n - 2], totals[n - 3]});
                        const double mn = std::min(
                            {totals[n - 1], totals[n - 2], totals[n - 3]});
                        spread = mx - mn;
                    }
                    const bool tiny_tail = tail <= target;
                    const bool stable =
                        spread <= target && fit_rms <= 0.05 && totals.size() >= 3;
                    if (tiny_tail || stable) {
                        out.value = total;
                        out.truncation = tail;
                        out.tail = model;
                        out.abs_err =
                            err_acc +
                            (tiny_tail ? 0.6 * tail
                                       : 2.0 * spread +
                                             tail * std::min(0.5, 2.0 * fit_rms));
                        return out;
                    }
                } else {
                    totals.clear();
                }
            }
        }

        s_lo = s_hi;
        if (s_lo > 1e250) break;
    }

    // Window budget exhausted without meeting the tail target: report the
    // best estimate with an honest (large) error bar.
    out.value = acc;
    out.truncation = 0.0;
    out.abs_err = err_acc + std::abs(acc);
    return out;
}

double invert_monotone(const Fn& f, double lo, double hi, double rel_xtol,
                       double abs_xtol) {
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (std::isnan(fa) || std::isnan(fb) || (fa > 0) == (fb > 0))
        throw std::invalid_argument("invert_monotone: endpoints do not bracket a root");

    double width_prev = std::abs(b - a);
    int since_shrink = 0;
    for (int iter = 0; iter < 240; ++iter) {
        const double width = std::abs(b - a);
        if (width <= rel_xtol * std::max(std::abs(a), std::abs(b)) + abs_xtol)
            break;
        double m;
        if (since_shrink < 2 && fb != fa) {
            m = b - fb * (b - a) / (fb - fa);  // secant
            const double guard = 0.01 * width;
            if (!(m > std::min(a, b) + guard && m < std::max(a, b) - guard))
                m = 0.5 * (a + b);
        } else {
            m = 0.5 * (a + b);
            since_shrink = 0;
        }
        const double fm = f(m);
        if (fm == 0.0 || m == a || m == b) return m;
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
        if (std::abs(b - a) > 0.6 * width_prev)
            ++since_shrink;
        else
            since_shrink = 0;
        width_prev = std::abs(b - a);
    }
    return 0.5 * (a + b);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_slope: need two or more samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
        throw std::invalid_argument("Pchip: need matched arrays of length >= 2");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1]))
            throw std::invalid_argument("Pchip: abscissae must be strictly increasing");

    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
        d_[0] = d_[1] = delta[0];
        return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d_[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0)
            d = 0.0;
        else if (d0 * d1 < 0.0 && std::abs(d) > 3.0 * std::abs(d0))
            d = 3.0 * d0;
        return d;
    };
    d_[0] = endpoint(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

std::size_t Pchip::locate(double x) const {
    if (x <= x_.front()) return 0;
    if (x >= x_[x_.size() - 2]) return x_.size() - 2;
    return static_cast<std::size_t>(
               std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
}

double Pchip::operator()(double x) const {
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
}

double Pchip::derivative(double x) const {
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double g00 = (6 * t2 - 6 * t) / h;
    const double g10 = 3 * t2 - 4 * t + 1;
    const double g01 = (-6 * t2 + 6 * t) / h;
    const double g11 = 3 * t2 - 2 * t;
    return g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
}

}  // namespace elslab::num
