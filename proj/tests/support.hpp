#pragma once

#include <cmath>
#include <vector>

namespace testutil {

/// |a - b| <= tol * max(|a|, |b|, floor)
inline bool close_rel(double a, double b, double tol, double floor = 1.0) {
    const double scale = std::max({std::fabs(a), std::fabs(b), floor});
    return std::fabs(a - b) <= tol * scale;
}

inline bool close_abs(double a, double b, double tol) {
    return std::fabs(a - b) <= tol;
}

/// Geometric grid from lo to hi with n points (inclusive endpoints).
inline std::vector<double> geom_grid(double lo, double hi, int n) {
    std::vector<double> g;
    g.reserve(n);
    const double q = std::pow(hi / lo, 1.0 / (n - 1));
    double x = lo;
    for (int i = 0; i < n; ++i) {
        g.push_back(i + 1 == n ? hi : x);
        x *= q;
    }
    return g;
}

inline std::vector<double> linear_grid(double lo, double hi, int n) {
    std::vector<double> g;
    g.reserve(n);
    for (int i = 0; i < n; ++i)
        g.push_back(lo + (hi - lo) * i / (n - 1));
    return g;
}

}  // namespace testutil
