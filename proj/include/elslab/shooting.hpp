#pragma once

#include <elslab/errors.hpp>
#include <elslab/nonlinearity.hpp>
#include <elslab/potential.hpp>

#include <string>
#include <vector>

namespace elslab::shoot {

enum class Classification {
    BoundedLimit,       ///< u(r) -> beta finite
    EntireLarge,        ///< u increasing and unbounded on the whole ray
    FiniteRadiusBlowup, ///< u -> +inf at a finite r*
    Indeterminate       ///< horizon too short to decide; raise r_max
};

const char* to_string(Classification c);

/// Thrown when a trajectory touches u = 0 (possible with negative initial
/// slope); such runs leave the domain where the equation is posed.
struct trajectory_invalid : numerical_error {
    explicit trajectory_invalid(const std::string& what, double r)
        : numerical_error(what), r_hit(r) {}
    double r_hit;
};

struct ShootingConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double r_max = 1e3;
    double blowup_threshold = 1e12;
    int max_bisect = 200;
    /// Start radius; negative selects the density's natural start
    /// (1 for tail-normalized families, 0 at a regular center).
    double r0 = -1.0;
    /// Classification horizon for bisection probes; escalated by factors of
    /// 10 (up to probe_horizon_max) when a probe is still growing undecided.
    /// The cap keeps probes inside the span where accumulated local error,
    /// amplified through the growing mode of the variational equation, stays
    /// far below the trajectory itself; beyond it a still-growing probe is
    /// treated as undecided rather than forced to a verdict.
    double probe_horizon = 1e6;
    double probe_horizon_max = 1e10;
};

struct RadialSolution {
    std::vector<double> r_grid;
    std::vector<double> u_grid;
    std::vector<double> du_grid;
    std::vector<double> ddu_grid;  ///< from the equation at each node
    Classification classification = Classification::Indeterminate;
    double beta = 0.0;          ///< limit value when BoundedLimit
    double r_star = 0.0;        ///< blow-up radius when FiniteRadiusBlowup
    double r_star_width = 0.0;  ///< reported bracket width of r_star
    int D = 3;
    double r0 = 0.0, u0 = 0.0, du0 = 0.0;  ///< initial data used
    double err_estimate = 0.0;  ///< accumulated local-error proxy for u(r_end)
};

/// One bisection probe: the shot parameter, what the trajectory did, and the
/// horizon that decided it.
struct ProbeRecord {
    double param = 0.0;
    Classification outcome = Classification::Indeterminate;
    double horizon = 0.0;
};

struct BisectLog {
    std::vector<ProbeRecord> probes;
    double lo = 0.0, hi = 0.0;
    double width = 0.0;
};

/// Integrate u'' + (D-1)u'/r = rho(r) f(u) from (u0, du0) at the start radius
/// with an embedded Runge-Kutta pair, and classify the trajectory.
/// Blow-up is finalized by pushing into the singularity until the step
/// collapses, then adding the remaining analytic travel time.
RadialSolution integrate_ivp(const nonlin::Nonlinearity& nl,
                             const pot::RadialPotential& pot, double u0,
                             double du0, const ShootingConfig& cfg = {});

/// Locate the separatrix slope b* at u(r0) = u1 between bounded trajectories
/// and finite-radius blow-up; returns the separatrix trajectory integrated to
/// cfg.r_max. Bracket width <= 1e-12 |b*|.
RadialSolution find_els(const nonlin::Nonlinearity& nl,
                        const pot::RadialPotential& pot, double u1,
                        const ShootingConfig& cfg = {},
                        BisectLog* log = nullptr);

/// Bisect the center value u(0) (slope 0) until the trajectory's limit equals
/// beta within 1e-6.
RadialSolution find_bounded(const nonlin::Nonlinearity& nl,
                            const pot::RadialPotential& pot, double beta,
                            const ShootingConfig& cfg = {},
                            BisectLog* log = nullptr);

/// Bisect the center value u(0) so that the blow-up radius equals R within
/// 1e-8 R, with constant density m in dimension D; returns the trajectory on
/// [0, R). Requires a superlinearity integral finite enough for blow-up.
RadialSolution boundary_blowup_ball(const nonlin::Nonlinearity& nl, double m,
                                    double R, int D,
                                    const ShootingConfig& cfg = {},
                                    BisectLog* log = nullptr);

/// Quintic-Hermite evaluation between stored nodes (uses u, u', u'').
double eval_u(const RadialSolution& sol, double r);
double eval_du(const RadialSolution& sol, double r);

}  // namespace elslab::shoot
