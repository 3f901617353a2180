#pragma once

#include <functional>
#include <optional>
#include <string>

#include "elslab/numerics.hpp"

namespace elslab::nonlin {

/// A source-term nonlinearity f(u) for u >= 0 together with the metadata the
/// rest of the library needs: derivative, optional closed-form antiderivative
/// F(u) = int_{F_origin}^{u} f, and the threshold beyond which f is strictly
/// increasing (infinity when no such tail exists, e.g. oscillating entries).
struct Nonlinearity {
    std::string key;
    std::function<double(double)> f;
    std::function<double(double)> fprime;
    std::optional<std::function<double(double)>> F_closed;
    double F_origin = 0.0;
    double monotone_from = 0.0;
    bool vanishes_at_zero = true;
    /// Optional fast path for int_a^b ds / f(s) (b may be +infinity),
    /// noise-free and cheap; set on entries whose reciprocal integrates in
    /// closed or prefix-summed form (the monotone envelope provides it).
    std::optional<std::function<double(double, double)>> inv_integral;
    /// Optional smooth lower bound for the antiderivative, valid on
    /// [F_floor_from, inf). Quadratures against it never have to resolve
    /// oscillations of f, which makes cheap finite-radius singularity
    /// certificates possible for rapidly oscillating entries.
    std::optional<std::function<double(double)>> F_floor;
    double F_floor_from = 0.0;
};

/// Catalog constructor. Keys:
///   power:p=<P>[,scale=<S>]          f(u) = S u^P, P >= 1 (S defaults to 1)
///   oscillating                      f(u) = u^2 (1 + cos u)
///   logquartic                       f(u) = u (ln u)^4 for u >= e,
///                                    power-extended below e
///   exponential                      f(u) = e^u - 1
///   shifted:base=<key>,tk=<T>        f(u) = base(u + T)
Nonlinearity make_nonlinearity(const std::string& key);

/// F(u) = int_{F_origin}^{u} f(s) ds; closed form when available, adaptive
/// quadrature otherwise.
double eval_F(const Nonlinearity& nl, double u, double rel_tol = 1e-12);

struct KOResult {
    num::Convergence kind = num::Convergence::Finite;
    double value = 0.0;
    double abs_err = 0.0;
    double truncation = 0.0;
    double tail_exponent = 0.0;  ///< fitted decay of 1/sqrt(F)
};

/// int_{lower}^{inf} ds / sqrt(F(s)). Requires F(lower) > 0. Divergence is
/// detected from the fitted tail decay (exponent <= 1 over two decades).
KOResult ko_integral(const Nonlinearity& nl, double lower,
                     double rel_tol = 1e-6);

/// Phi(u) = int_u^inf dt / sqrt(F(t) - F(u)), evaluated through the
/// substitution s = F(t), s = sigma^2 + F(u):
///   Phi(u) = 2 int_0^inf dsigma / f(F^{-1}(sigma^2 + F(u))),
/// which removes the endpoint singularity. Requires u >= monotone_from and a
/// strictly increasing f beyond u.
double phi(const Nonlinearity& nl, double u, double rel_tol = 1e-8);

/// Inverse of phi: returns u with |phi(u) - y| <= 1e-8 * y.
double phi_inverse(const Nonlinearity& nl, double y, double rel_tol = 1e-8);

/// Inverse of F on [F_origin, inf): returns u >= 0 with F(u) = s.
double F_inverse(const Nonlinearity& nl, double s, double rel_tol = 1e-12);

/// Strictly increasing continuous majorant fbar >= f with fbar(0) = 0,
/// built from a windowed conservative running supremum plus the strictness
/// corrections eps*min(t,1) + eps*ln(1+t), eps = eps_scale * f(1).
/// The returned Nonlinearity is lazily extended and safe to copy.
Nonlinearity monotone_envelope(const Nonlinearity& nl,
                               double eps_scale = 1e-6);

/// Solves int_w^beta ds / fbar(s) = target for w in (0, beta); beta may be
/// +infinity when the envelope tail integral converges.
double envelope_tail_inverse(const Nonlinearity& fbar, double beta,
                             double target, double rel_tol = 1e-10);

}  // namespace elslab::nonlin
