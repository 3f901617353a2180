#pragma once

#include <elslab/numerics.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace elslab::pot {

struct MassCache;

/// Radial density rho(r) on [0, inf) with a power-law tail r^{-alpha} for r >= 1.
struct RadialPotential {
    std::string key;
    int D = 3;
    /// Tail exponent: rho(r) ~ r^{-alpha} for r >= 1 (exact for the capped family).
    double alpha = 0.0;
    num::Fn rho;
    bool regular_at_zero = true;
    /// Default shooting start radius: 1 for the tail-normalized families
    /// (data is posed as u(1)), 0 for densities natural at the center.
    double natural_start = 0.0;
    /// Derivative bound constant for the perturbation family (0 when unused).
    double perturb_C = 0.0;
    /// Perturbation sigma(r) with rho = r^{2-2D}(1+sigma) for r >= 1 (null when unused).
    num::Fn sigma;
    /// Closed-form cumulative mass, when the family admits one.
    std::function<double(double)> mass_closed;
    std::shared_ptr<MassCache> cache;
};

/// Density rho = v^{-alpha/2} whose level sets are the ellipsoids
/// v(x) = (x1/a)^2 + |x'|^2 = const.
struct EllipsoidPotential {
    int D = 3;
    double a = 1.0;
    double alpha = 3.0;
};

struct HrhoResult {
    num::Convergence kind = num::Convergence::Finite;
    double value = 0.0;
    double abs_err = 0.0;
};

struct EllipsoidCriterion {
    bool meanc_holds = false;
    bool monotone_holds = false;
};

/// Build a density from a string key:
///   "model:alpha=4"            capped power tail, rho = 1 on [0,1], r^{-alpha} beyond
///   "model:alpha=4,blend=1"    same with a C1 cubic joint over [0.9, 1]
///   "perturbed:C=1"            rho = r^{2-2D}(1 + sigma), sigma = (C/(D-1)) r^{1-D}
///   "perturbed:C=1,sigma=zero" unperturbed critical tail r^{2-2D}
///   "smooth:alpha=4"           rho = (1+r^2)^{-alpha/2}, smooth everywhere
RadialPotential make_potential(const std::string& key, int D);

/// Parse "ellipsoid:a=0.9,alpha=2.5,D=4".
EllipsoidPotential make_ellipsoid_potential(const std::string& key);

/// Decide integrability of r*rho(r) over (0, inf) and report the integral.
HrhoResult check_Hrho(const RadialPotential& pot, double rel_tol = 1e-10);

/// Cumulative mass m(s) = integral of t^{D-1} rho(t) over [0, s] (memoized).
double mass(const RadialPotential& pot, double s);

/// U(r) = integral of s^{1-D} m(s) over [r, inf): the decaying solution of
/// -(U'' + (D-1)U'/r) = rho. Requires the r*rho integral to converge.
double newtonian_potential(const RadialPotential& pot, double r,
                           double rel_tol = 1e-10);

/// U on an ascending grid: one tail evaluation at the far end plus backward
/// increment accumulation, so consecutive values differ by smooth quadratures.
std::vector<double> newtonian_potential_grid(const RadialPotential& pot,
                                             const std::vector<double>& r,
                                             double rel_tol = 1e-10);

/// Arithmetic form of the level-set curvature criterion for the ellipsoid
/// family: the mean-curvature inequality holds iff alpha <= a^2(2D-2), and the
/// strengthened monotone variant iff alpha + 2 <= a^2(2D-2).
EllipsoidCriterion ellipsoid_criterion(double a, double alpha, int D);

/// Minimum over the level set rho = level of 2(D-1)H - |grad rho|/rho, with H
/// the mean curvature of the level set taken from the exact quadric closed
/// form (H >= 0 when the enclosed superlevel region is convex).
double mean_curvature_margin(const EllipsoidPotential& pot, double level,
                             int samples);

}  // namespace elslab::pot
