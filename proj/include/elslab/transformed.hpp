#pragma once

#include <cstddef>
#include <vector>

#include <elslab/errors.hpp>
#include <elslab/nonlinearity.hpp>
#include <elslab/potential.hpp>
#include <elslab/shooting.hpp>

namespace elslab::vt {

/// Parameters of the change of variables t = r^{1-alpha/2} that turns the
/// radial equation with a power-decay density into an autonomous-weight
/// problem on the half-line. K = (alpha - 2D + 2)/(alpha - 2) < 1 is the
/// damping exponent of the transformed equation; K = 0 exactly when
/// alpha = 2D - 2.
struct TransformConfig {
    double alpha = 4.0;
    int D = 3;
    double K = 0.0;
};

TransformConfig make_transform_config(double alpha, int D);

/// An increasing solution reindexed by its own values: v_grid is the solution
/// value, t_grid the (decreasing) transformed radius at that value, and
/// V_grid = -dv/dt > 0 the speed of the profile.
struct ProfileVT {
    std::vector<double> v_grid;
    std::vector<double> t_grid;
    std::vector<double> V_grid;
    TransformConfig cfg;
};

/// Two trajectories crossed where theory says they are ordered; this always
/// signals a solver defect upstream, never a property of the problem.
struct ordering_violation : numerical_error {
    using numerical_error::numerical_error;
};

/// Reindex an unbounded increasing trajectory by solution value:
/// t_j = r_j^{1-alpha/2}, v_j = u_j, V_j = (2/(alpha-2)) r_j^{alpha/2} u'_j.
/// Throws std::invalid_argument if u is not strictly increasing.
ProfileVT to_transformed(const shoot::RadialSolution& sol,
                         const TransformConfig& cfg);

/// Minimum finite-difference increment of v -> t^K V(v) over consecutive
/// grid pairs; positive for valid unbounded profiles. Throws
/// std::invalid_argument on a degenerate (fewer than two point) profile.
double check_tKV_monotone(const ProfileVT& profile, const TransformConfig& cfg);

/// Tail limit of V^2(v)/F(v), estimated over the last two decades in v by a
/// least-squares fit linear in 1/v. Only defined for the alpha = 2D-2 family
/// (K = 0); the limit equals 2/(D-2)^2. Throws std::invalid_argument when
/// alpha is not 2D-2 or the profile spans less than three decades in v.
double hopital_limit(const ProfileVT& profile, const nonlin::Nonlinearity& nl,
                     int D);

/// Pointwise gap between two ordered unbounded trajectories on a shared
/// geometric radius grid, with the decay envelope t^{(1-K)} (or t when K < 0)
/// and the running ratio gap/envelope.
struct GapReport {
    std::vector<double> r_grid;
    std::vector<double> gap;       ///< u2 - u1 >= 0
    std::vector<double> envelope;  ///< t^{1-K} for K in [0,1), t for K < 0
    std::vector<double> ratio;     ///< gap / envelope
    double K = 0.0;
    double max_ratio = 0.0;
    double switch_radius = 0.0;  ///< where direct differencing hands over
};

/// Gap(r) = u2(r) - u1(r) for two unbounded trajectories of the same
/// problem (swapped so u2 >= u1 near the start). Direct differencing is used
/// while the gap stays resolvable above the integration error; past that the
/// gap is continued through the logarithmic-derivative (Riccati) form of the
/// linearized equation, initialized on its decaying branch at the far end and
/// integrated backward. Throws ordering_violation if the trajectories cross.
GapReport uniqueness_gap(const shoot::RadialSolution& a,
                         const shoot::RadialSolution& b,
                         const nonlin::Nonlinearity& nl,
                         const pot::RadialPotential& pot,
                         const TransformConfig& cfg);

/// Residual of the transformed equation v'' + (K/t) v' = (4/(alpha-2)^2) f(v)
/// measured by finite differences on a uniform grid in ln t, with v resampled
/// from the trajectory by quintic interpolation.
struct ResidualReport {
    double max_abs_residual = 0.0;
    double max_rel_residual = 0.0;  ///< max |residual| / f(v)
    std::size_t n_points = 0;
};

ResidualReport vequation_residual(const shoot::RadialSolution& sol,
                                  const nonlin::Nonlinearity& nl,
                                  const TransformConfig& cfg);

}  // namespace elslab::vt
