#pragma once

#include <cstddef>
#include <vector>

#include <elslab/errors.hpp>
#include <elslab/nonlinearity.hpp>
#include <elslab/potential.hpp>
#include <elslab/shooting.hpp>

namespace elslab::bounds {

/// A hypothesis the check depends on fails structurally (divergent
/// comparison integral, non-monotone weight, ...): the check is not wrong,
/// it does not apply.
struct inapplicable_error : numerical_error {
    using numerical_error::numerical_error;
};

/// Aligned pointwise comparison between a computed quantity and an explicit
/// bound. What "primal"/"bound"/"margin" hold depends on the producing
/// operation and is documented there; `defined` marks grid points where the
/// comparison exists at all. Scalar fields carry the operation's headline
/// numbers and are zero when not meaningful.
struct BoundReport {
    std::vector<double> grid;
    std::vector<double> primal;
    std::vector<double> bound;
    std::vector<double> margin;
    std::vector<char> defined;
    bool verdict = false;
    double tolerance = 0.0;
    double r_min = 0.0;     ///< first radius where the bound applies
    double c_max = 0.0;     ///< largest admissible prefactor (growth ceiling)
    double sup_value = 0.0; ///< supremum of the checked quantity
};

/// Explicit global subsolution with ceiling beta: w(r) solves
/// int_w^beta ds/fbar(s) = U(r) with fbar the increasing majorant of f and
/// U the Newtonian tail potential of the density. Report: primal = w,
/// bound = beta, margin = the differential-inequality residual
/// (Laplacian of w) - rho f(w), checked >= -tolerance with
/// tolerance = 1e-6 * max rho f(w). Points where U exceeds the total
/// envelope integral are marked undefined. beta may be +infinity.
BoundReport subsolution_w_beta(const nonlin::Nonlinearity& nl,
                               const pot::RadialPotential& pot, double beta,
                               const std::vector<double>& r_grid);

/// The growth floor int_{u(r)}^inf ds/f(s) <= U(r) satisfied by every
/// unbounded increasing trajectory: primal = the remaining-integral side,
/// bound = U, margin = U - primal >= -1e-9. Throws inapplicable_error when
/// int^inf ds/f diverges; requires f nondecreasing from the trajectory's
/// smallest value on.
BoundReport implicit_lower_bound(const shoot::RadialSolution& sol,
                                 const nonlin::Nonlinearity& nl,
                                 const pot::RadialPotential& pot);

/// The explicit growth ceiling Gamma(r) = Phi^{-1}(c r^{1-alpha/2}):
/// primal = u, bound = Gamma, margin = Gamma - u >= 0 for r >= r_min (the
/// first radius where the Phi^{-1} argument is inside its range). c_max
/// reports the empirically largest admissible c = min Phi(u(r)) r^{alpha/2-1}
/// over the defined window.
BoundReport gamma_bound(const shoot::RadialSolution& sol,
                        const nonlin::Nonlinearity& nl, double alpha,
                        double c);

struct FiddgrResult {
    bool holds = false;
    double best_C = 0.0;
};

/// Checks sup over u >= M of (f(u)/u) Phi^2(u): holds when the running sup
/// over the two top sampled decades agrees within 5%; best_C is the sup.
FiddgrResult fiddgr_check(const nonlin::Nonlinearity& nl, double M);

/// Radial energy P(r) = u'(r)^2 / rho(r) - 2 F(u(r)) on [R, r_end]:
/// primal = P, bound = 2 C_R / (r^{2D-2} rho) + slack with the proof
/// constant C_R = R^{2D-2} u'(R)^2 / 2 and slack 10x the integrator's
/// accumulated error estimate (P doubles the solver's relative error).
/// Requires r^{2D-2} rho(r) nondecreasing beyond R; throws
/// inapplicable_error otherwise. sup_value reports sup P.
BoundReport energy_P_radial(const shoot::RadialSolution& sol,
                            const pot::RadialPotential& pot,
                            const nonlin::Nonlinearity& nl, double R);

}  // namespace elslab::bounds
