#pragma once

#include <functional>
#include <vector>

namespace elslab::num {

using Fn = std::function<double(double)>;

enum class Convergence { Finite, Divergent };

struct QuadResult {
    double value = 0.0;
    double abs_err = 0.0;   ///< conservative estimate of the absolute error
    int evaluations = 0;
    bool converged = true;  ///< false when the interval budget ran out first
};

/// Adaptive Gauss–Kronrod (7,15) quadrature on a finite interval.
/// Splits the worst interval until the summed error estimate meets
/// max(rel_tol * |value|, abs_tol) or max_intervals is exhausted.
QuadResult integrate(const Fn& f, double a, double b,
                     double rel_tol = 1e-12, double abs_tol = 0.0,
                     int max_intervals = 4000);

/// Fitted model of an integrand tail g(s) ~ scale * s^{-exponent} *
/// (ln s)^{-log_exponent}; log_exponent is zero for the pure power model.
struct TailModel {
    double exponent = 0.0;
    double log_exponent = 0.0;
    double scale = 0.0;
    bool log_corrected = false;
};

struct ImproperResult {
    Convergence kind = Convergence::Finite;
    double value = 0.0;      ///< windows + fitted tail (Finite only)
    double abs_err = 0.0;    ///< window errors + tail-model uncertainty
    double truncation = 0.0; ///< fitted tail beyond the last window
    double last_s = 0.0;     ///< where integration stopped
    TailModel tail;
    int evaluations = 0;
};

/// Integral of g over [a, +inf) for a > 0 and eventually monotone g >= 0.
/// Accumulates geometric windows [a 2^k, a 2^{k+1}], fits the tail decay on
/// the trailing windows (power model, with a log-corrected variant when the
/// plain fit is poor), and stops once the fitted tail is below
/// 0.5 * rel_tol * |accumulated|. Divergence is declared when the fitted
/// decay stays at or below 1/s over two consecutive decades of windows.
ImproperResult integrate_to_infinity(const Fn& g, double a,
                                     double rel_tol = 1e-8,
                                     int max_windows = 220);

/// Root of f on [lo, hi] given f(lo), f(hi) of opposite sign (either order).
/// Safeguarded secant/bisection; converges to rel_xtol * |x| + abs_xtol.
double invert_monotone(const Fn& f, double lo, double hi,
                       double rel_xtol = 1e-14, double abs_xtol = 0.0);

/// Least-squares slope of y against x (used for log-log decay fits).
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Shape-preserving piecewise-cubic interpolant (Fritsch–Carlson weights).
/// Monotone data yields a monotone interpolant.
class Pchip {
  public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    double derivative(double x) const;
    const std::vector<double>& knots() const { return x_; }

  private:
    std::vector<double> x_, y_, d_;
    std::size_t locate(double x) const;
};

}  // namespace elslab::num
