#include <elslab/shooting.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace elslab::shoot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
// b - bhat: weights of the embedded error estimate.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0,
                 e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

// Checkpoints for tail diagnostics: 8 per decade of r.
const double kCpRatio = std::pow(10.0, 0.125);

struct Checkpoint {
    double r, u, du;
};

/// Quintic Hermite evaluation on [r0, r1] from (value, slope, curvature) at
/// both ends; x must lie inside the interval.
double hermite5(double r0, double y0, double d0, double s0, double r1,
                double y1, double d1, double s1, double x, bool slope) {
    const double h = r1 - r0;
    const double t = (x - r0) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    if (!slope) {
        const double A0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        const double A1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        const double A2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
        const double B0 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        const double B1 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        const double B2 = 0.5 * t3 - t4 + 0.5 * t5;
        return y0 * A0 + h * d0 * A1 + h * h * s0 * A2 + y1 * B0 +
               h * d1 * B1 + h * h * s1 * B2;
    }
    const double A0p = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    const double A1p = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    const double A2p = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
    const double B0p = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    const double B1p = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    const double B2p = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
    return (y0 * A0p + h * d0 * A1p + h * h * s0 * A2p + y1 * B0p +
            h * d1 * B1p + h * h * s1 * B2p) /
           h;
}

struct TailDiag {
    bool bounded = false;
    double beta = 0.0;
    bool flux_stalled = false;
};

/// Decide whether the checkpoint tail has a finite limit: the corrected
/// estimate beta_hat = u + r u'/(D-2) is exact for a harmonic tail, and its
/// residual decays geometrically along geometric checkpoints, so Aitken
/// delta-squared acceleration (two passes) converges fast. Flux stall
/// (relative change of r^{D-1} u' below 1e-4 per decade) is reported
/// separately for probe use.
TailDiag diagnose_tail(const std::vector<Checkpoint>& cps, int D) {
    TailDiag out;
    const std::size_t n = cps.size();
    if (n >= 9) {
        const auto flux = [&](std::size_t i) {
            return std::pow(cps[i].r, D - 1) * cps[i].du;
        };
        const double f_now = flux(n - 1);
        const double f_prev = flux(n - 9);
        if (std::abs(f_now - f_prev) <=
            1e-4 * std::max(std::abs(f_now), 1e-300))
            out.flux_stalled = true;
    }
    if (n < 5) return out;
    std::vector<double> bh(n);
    for (std::size_t i = 0; i < n; ++i)
        bh[i] = cps[i].u + cps[i].r * cps[i].du / (D - 2);
    const double scale = std::max(1.0, std::abs(bh[n - 1]));
    if (std::abs(bh[n - 1] - bh[n - 2]) <= 1e-9 * scale &&
        std::abs(bh[n - 2] - bh[n - 3]) <= 1e-9 * scale) {
        out.bounded = true;
        out.beta = bh[n - 1];
        return out;
    }
    // Acceleration is only meaningful for a contracting tail: Aitken maps a
    // geometrically *growing* sequence to the fixed point of its growth, so
    // without this guard an unbounded trajectory would look convergent.
    const bool contracting =
        std::abs(bh[n - 1] - bh[n - 2]) < std::abs(bh[n - 2] - bh[n - 3]) &&
        std::abs(bh[n - 2] - bh[n - 3]) < std::abs(bh[n - 3] - bh[n - 4]);
    if (!contracting) return out;
    std::vector<double> A(n, 0.0);
    for (std::size_t k = 2; k < n; ++k) {
        const double d1 = bh[k] - bh[k - 1];
        const double d0 = bh[k - 1] - bh[k - 2];
        const double den = d1 - d0;
        A[k] = std::abs(den) > 1e-14 * scale ? bh[k] - d1 * d1 / den : bh[k];
    }
    const double tolA = 1e-7 * std::max(1.0, std::abs(A[n - 1]));
    if (std::abs(A[n - 1] - A[n - 2]) <= tolA &&
        std::abs(A[n - 2] - A[n - 3]) <= tolA) {
        out.bounded = true;
        out.beta = A[n - 1];
        return out;
    }
    // The accelerated sequence can retain a slower second mode (the next
    // power of 1/r); a second pass removes it.
    if (n < 7) return out;
    std::vector<double> A2(n, 0.0);
    for (std::size_t k = 4; k < n; ++k) {
        const double d1 = A[k] - A[k - 1];
        const double d0 = A[k - 1] - A[k - 2];
        const double den = d1 - d0;
        A2[k] = std::abs(den) > 1e-14 * scale ? A[k] - d1 * d1 / den : A[k];
    }
    const double tolA2 = 1e-6 * std::max(1.0, std::abs(A2[n - 1]));
    if (std::abs(A2[n - 1] - A2[n - 2]) <= tolA2 &&
        std::abs(A2[n - 2] - A2[n - 3]) <= tolA2) {
        out.bounded = true;
        out.beta = A2[n - 1];
    }
    return out;
}

/// Result of one integration sweep before final labeling.
struct SweepResult {
    RadialSolution sol;  // grid filled only in store mode
    std::vector<Checkpoint> cps;
    bool blew_up = false;
    double r_last = 0.0, u_last = 0.0, du_last = 0.0;
};

/// Rigorous finite-radius singularity certificate at a frontier node
/// (r1, u1, w1) with w1 > 0. The flux identity
///   (r^{2(D-1)} u'^2)' = 2 r^{2(D-1)} rho f(u) u'
/// gives the pointwise minorant, for r in [r1, R],
///   u'(r) >= (r1/r)^{D-1} sqrt(w1^2 + 2 mrho(r) (F(u(r)) - F(u1))),
/// mrho(r) = min rho over [r1, r]. Marching the minorant with a monotone
/// Euler scheme -- radius factors taken at each step's far end, the value at
/// its near end, both of which only lower the slope -- keeps every iterate
/// below the true trajectory, so a minorant explosion inside the window
/// proves u cannot exist up to its radius. F enters through its smooth
/// floor, so the march never resolves oscillations of f. Returns the
/// certified span past r1 (blow-up no later than r1 + 1.5 * span), or 0
/// when the window does not certify.
double singularity_certificate(const nonlin::Nonlinearity& nl,
                               const num::Fn& rho, int D, double r1, double u1,
                               double w1) {
    if (!nl.F_floor || !(w1 > 0.0) || !(u1 > nl.F_floor_from)) return 0.0;
    const auto& floor_F = *nl.F_floor;
    const double F1 = nonlin::eval_F(nl, u1);
    const double w2 = w1 * w1;
    const double R = 8.0 * r1;
    double y = u1, r = r1;
    double m = 0.98 * rho(r1);
    for (int it = 0; it < 20000 && r < R; ++it) {
        const double gain = std::max(floor_F(y) - F1, 0.0);
        const double g0 = std::pow(r1 / r, D - 1) * std::sqrt(w2 + 2.0 * m * gain);
        double h = std::min(0.05 * y / std::max(g0, 1e-300), (R - r1) / 128.0);
        h = std::min(h, R - r);
        m = std::min(m, 0.98 * rho(r + h));
        if (!(m > 0.0)) return 0.0;
        y += h * std::pow(r1 / (r + h), D - 1) * std::sqrt(w2 + 2.0 * m * gain);
        r += h;
        if (y > 1e90) return r - r1;
    }
    return 0.0;
}

/// Integrate the radial equation from (r0, u0, du0) toward r_end.
/// store: keep the full node grid. need_rstar: on blow-up, push into the
/// singularity and attach the analytic remaining-travel integral so that
/// r_star is resolved far below 1e-6 relative; otherwise stop at threshold.
SweepResult sweep(const nonlin::Nonlinearity& nl,
                  const pot::RadialPotential& pot, int D, double r0, double u0,
                  double du0, double r_end, const ShootingConfig& cfg,
                  bool store, bool need_rstar) {
    if (!(u0 > 0.0))
        throw std::invalid_argument("initial value must be positive");
    if (!(r_end > r0))
        throw std::invalid_argument("integration span is empty");

    SweepResult res;
    RadialSolution& sol = res.sol;
    sol.D = D;
    sol.r0 = r0;
    sol.u0 = u0;
    sol.du0 = du0;

    const num::Fn& rho = pot.rho;
    const auto& f = nl.f;
    const auto accel = [&](double r, double u, double w) {
        return rho(r) * f(u) - (D - 1) * w / r;
    };

    double r, u, w;     // current node
    double a_node;      // u'' at the current node
    if (r0 == 0.0) {
        if (du0 != 0.0)
            throw std::invalid_argument(
                "a regular center requires zero initial slope");
        const double rho0 = rho(0.0);
        const double f0 = f(u0);
        // Series step u = u0 + rho0 f0 r^2/(2D) + O(r^4): pick r_s so the
        // omitted quartic term is far below the step tolerance.
        const double curv = std::max(rho0 * f0, 1e-300);
        const double r_s =
            std::min({1e-4 * std::sqrt(2.0 * D * u0 / curv), 1e-3,
                      0.25 * r_end});
        if (store) {
            sol.r_grid.push_back(0.0);
            sol.u_grid.push_back(u0);
            sol.du_grid.push_back(0.0);
            sol.ddu_grid.push_back(rho0 * f0 / D);
        }
        r = r_s;
        u = u0 + rho0 * f0 * r_s * r_s / (2.0 * D);
        w = rho0 * f0 * r_s / D;
    } else {
        r = r0;
        u = u0;
        w = du0;
    }
    a_node = accel(r, u, w);
    if (store) {
        sol.r_grid.push_back(r);
        sol.u_grid.push_back(u);
        sol.du_grid.push_back(w);
        sol.ddu_grid.push_back(a_node);
    }

    double next_cp = std::max(r, 1e-3);
    res.cps.push_back({r, u, w});
    next_cp *= kCpRatio;

    // Error-estimate accumulators: slope errors are transported into value
    // errors over the remaining span, S_u + r_last * S_w - S_rw.
    double S_u = 0.0, S_w = 0.0, S_rw = 0.0;

    // A threshold crossing alone does not prove blow-up: a merely growing
    // trajectory also passes any fixed value eventually. Crossing arms push
    // mode; blow-up is declared only when the step collapses or the hard
    // caps are hit. If the radius instead doubles past the crossing point
    // while stepping normally, the growth is tame: disarm and raise the
    // trigger so integration can continue toward r_end.
    bool pushing = false;   // armed: past the trigger, chasing confirmation
    bool confirmed = false; // singularity actually reached
    double r_thr = 0.0;     // radius where the trigger fired
    double working_threshold = cfg.blowup_threshold;
    double h = 1e-4 * std::max(r, 1e-3);
    double k1u = w, k1w = a_node;

    const double rel = cfg.rel_tol, abs_ = cfg.abs_tol;
    long steps = 0;
    const long max_steps = 40000000L;

    // Certificate rescue for slow marches (rapidly oscillating f): consulted
    // on a step-count stride so that cheap trajectories -- including the
    // precise blow-up pushes, which finish in far fewer steps -- never reach
    // it and keep their exact r* resolution.
    const long cert_stride = 50000L;
    long next_cert = cert_stride;
    long steps_at_arm = 0;
    double cert_span = 0.0;

    while (r < r_end * (1.0 - 1e-14)) {
        if (++steps > max_steps)
            throw numerical_error("step budget exhausted at r=" +
                                  std::to_string(r));
        h = std::min(h, r_end - r);
        // Stages (FSAL: k1 comes from the previous step).
        const double k2u = w + h * a21 * k1w;
        const double k2w_r = r + h * 0.2;
        const double k2w = accel(k2w_r, u + h * a21 * k1u, k2u);
        const double k3u = w + h * (a31 * k1w + a32 * k2w);
        const double k3w = accel(r + h * 0.3,
                                 u + h * (a31 * k1u + a32 * k2u), k3u);
        const double k4u = w + h * (a41 * k1w + a42 * k2w + a43 * k3w);
        const double k4w = accel(
            r + h * 0.8, u + h * (a41 * k1u + a42 * k2u + a43 * k3u), k4u);
        const double k5u =
            w + h * (a51 * k1w + a52 * k2w + a53 * k3w + a54 * k4w);
        const double k5w = accel(
            r + h * (8.0 / 9.0),
            u + h * (a51 * k1u + a52 * k2u + a53 * k3u + a54 * k4u), k5u);
        const double k6u = w + h * (a61 * k1w + a62 * k2w + a63 * k3w +
                                    a64 * k4w + a65 * k5w);
        const double k6w = accel(r + h,
                                 u + h * (a61 * k1u + a62 * k2u + a63 * k3u +
                                          a64 * k4u + a65 * k5u),
                                 k6u);
        const double u_new =
            u + h * (b1 * k1u + b3 * k3u + b4 * k4u + b5 * k5u + b6 * k6u);
        const double w_new =
            w + h * (b1 * k1w + b3 * k3w + b4 * k4w + b5 * k5w + b6 * k6w);
        const double r_new = r + h;
        const double k7u = w_new;
        const double k7w = accel(r_new, u_new, k7u);
        const double err_u = h * (e1 * k1u + e3 * k3u + e4 * k4u + e5 * k5u +
                                  e6 * k6u + e7 * k7u);
        const double err_w = h * (e1 * k1w + e3 * k3w + e4 * k4w + e5 * k5w +
                                  e6 * k6w + e7 * k7w);

        bool finite = std::isfinite(u_new) && std::isfinite(w_new) &&
                      std::isfinite(k7w);
        double ratio = kInf;
        if (finite) {
            const double tol_u =
                abs_ + rel * std::max(std::abs(u), std::abs(u_new));
            const double tol_w =
                abs_ + rel * std::max(std::abs(w), std::abs(w_new));
            ratio = std::max(std::abs(err_u) / tol_u, std::abs(err_w) / tol_w);
        }
        if (ratio > 1.0) {
            // Rejected: shrink and retry, or conclude the step collapsed.
            const double shrink =
                std::isfinite(ratio)
                    ? std::max(0.2, 0.9 * std::pow(ratio, -0.2))
                    : 0.2;
            h *= shrink;
            if (h < 1e-14 * r) {
                if (pushing || u > 0.5 * working_threshold) {
                    pushing = true;
                    confirmed = true;
                    break;  // finalize blow-up from the last accepted node
                }
                throw numerical_error("step size collapsed at r=" +
                                      std::to_string(r));
            }
            continue;
        }

        // Accepted.
        S_u += std::abs(err_u);
        S_w += std::abs(err_w);
        S_rw += r * std::abs(err_w);

        if (u_new <= 0.0) {
            // Locate the zero crossing on the Hermite model and bail out.
            double lo = r, hi = r_new;
            for (int it = 0; it < 60 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double um = hermite5(r, u, w, a_node, r_new, u_new,
                                           w_new, k7w, mid, false);
                (um > 0.0 ? lo : hi) = mid;
            }
            throw trajectory_invalid(
                "trajectory reached u=0 near r=" + std::to_string(lo), lo);
        }

        while (next_cp <= r_new && res.cps.size() < 4096) {
            const double uc = next_cp == r_new
                                  ? u_new
                                  : hermite5(r, u, w, a_node, r_new, u_new,
                                             w_new, k7w, next_cp, false);
            const double dc = next_cp == r_new
                                  ? w_new
                                  : hermite5(r, u, w, a_node, r_new, u_new,
                                             w_new, k7w, next_cp, true);
            res.cps.push_back({next_cp, uc, dc});
            next_cp *= kCpRatio;
        }

        r = r_new;
        u = u_new;
        w = w_new;
        a_node = k7w;
        k1u = k7u;
        k1w = k7w;
        if (store) {
            sol.r_grid.push_back(r);
            sol.u_grid.push_back(u);
            sol.du_grid.push_back(w);
            sol.ddu_grid.push_back(a_node);
        }

        if (!pushing && u > working_threshold) {
            pushing = true;
            r_thr = r;
            steps_at_arm = steps;
        }
        if (pushing) {
            if (u >= 1e60 || f(u) >= 1e120) {
                confirmed = true;
                break;
            }
            if (r > 2.0 * r_thr) {
                pushing = false;
                working_threshold = std::max(working_threshold * 1e6, 1e3 * u);
            }
        }
        if (nl.F_floor && w > 0.0 && steps >= next_cert &&
            (!pushing || steps - steps_at_arm >= 10 * cert_stride)) {
            next_cert = steps + cert_stride;
            cert_span = singularity_certificate(nl, rho, D, r, u, w);
            if (cert_span > 0.0) {
                pushing = true;
                confirmed = true;
                break;
            }
        }

        const double grow = std::min(5.0, 0.9 * std::pow(ratio + 1e-30, -0.2));
        h *= std::max(0.2, grow);
    }

    res.r_last = r;
    res.u_last = u;
    res.du_last = w;
    sol.err_estimate = S_u + (r * S_w - S_rw);

    if (pushing && confirmed) {
        res.blew_up = true;
        if (cert_span > 0.0) {
            // Certificate confirmation: the singularity sits inside the
            // proving window (r, r + 1.5 * span]; marching any further would
            // mean resolving every oscillation of f, which the certificate
            // exists to avoid.
            sol.classification = Classification::FiniteRadiusBlowup;
            sol.r_star = r + 0.75 * cert_span;
            sol.r_star_width = 1.5 * cert_span;
            return res;
        }
        if (!need_rstar) {
            sol.classification = Classification::FiniteRadiusBlowup;
            sol.r_star = r;  // coarse; probes only need the flag
            sol.r_star_width = r;
            return res;
        }
        // The trajectory left every bounded window. The remaining travel to
        // the singularity follows from the energy identity with rho frozen on
        // the residual interval: r* = r + int_u^inf ds / sqrt(w^2 +
        // 2 rho (F(s) - F(u))), iterated once if the residual is not tiny.
        const double Fe = nonlin::eval_F(nl, u);
        const double w2 = w * w;
        double rho_bar = rho(r);
        const auto travel = [&](double rb) -> num::ImproperResult {
            const auto g = [&, rb](double s) {
                const double d = w2 + 2.0 * rb * (nonlin::eval_F(nl, s) - Fe);
                return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
            };
            return num::integrate_to_infinity(g, u, 1e-10);
        };
        auto t0 = travel(rho_bar);
        if (t0.kind == num::Convergence::Divergent)
            throw numerical_error(
                "blow-up tail integral diverges: the nonlinearity is too weak "
                "for finite-radius blow-up");
        double T = t0.value;
        double iter_gap = 0.0;
        if (T > 1e-10 * (r + T)) {
            auto t1 = travel(rho(r + 0.5 * T));
            iter_gap = std::abs(t1.value - T);
            T = t1.value;
        }
        sol.classification = Classification::FiniteRadiusBlowup;
        sol.r_star = r + T;
        sol.r_star_width =
            std::max(4.0 * std::numeric_limits<double>::epsilon() * sol.r_star,
                     iter_gap + t0.abs_err);
        res.r_last = r;
        res.u_last = u;
        res.du_last = w;
    }
    return res;
}

/// True when u(r_end) lies above the explicit bounded-solution lower bounds
/// for every limit value up to 1e6 — the unbounded-growth certificate.
bool exceeds_bounded_family(const nonlin::Nonlinearity& nl,
                            const pot::RadialPotential& pot, double r_end,
                            double u_end) {
    try {
        const double U = pot::newtonian_potential(pot, r_end, 1e-9);
        const nonlin::Nonlinearity fbar = nonlin::monotone_envelope(nl);
        for (double beta = 1.0; beta <= 1.0000001e6; beta *= 10.0) {
            const double wb = nonlin::envelope_tail_inverse(fbar, beta, U);
            if (!(u_end > wb)) return false;
        }
        return true;
    } catch (const std::exception&) {
        return u_end > 1e6;
    }
}

double resolve_r0(const pot::RadialPotential& pot, const ShootingConfig& cfg) {
    if (cfg.r0 >= 0.0) return cfg.r0;
    return pot.natural_start;
}

void validate_cfg(const ShootingConfig& cfg, double r0) {
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0))
        throw std::invalid_argument("tolerances must be positive");
    if (!(cfg.blowup_threshold > 0.0))
        throw std::invalid_argument("blow-up threshold must be positive");
    if (!(cfg.r_max > r0) || !(r0 >= 0.0))
        throw std::invalid_argument("need r_max > r0 >= 0");
    if (cfg.max_bisect < 1)
        throw std::invalid_argument("bisection budget must be positive");
}

enum class ProbeSide { Lower, Upper, Growing };

/// Classify one shooting probe against the separatrix: blow-up is Upper;
/// a stabilized or flux-stalled tail is Lower; otherwise the trajectory is
/// still growing at the horizon and the caller should escalate.
ProbeSide probe_side(const nonlin::Nonlinearity& nl,
                     const pot::RadialPotential& pot, int D, double r0,
                     double u1, double b, double horizon,
                     const ShootingConfig& cfg) {
    ShootingConfig pc = cfg;
    pc.r_max = horizon;
    try {
        SweepResult s =
            sweep(nl, pot, D, r0, u1, b, horizon, pc, false, false);
        if (s.blew_up) return ProbeSide::Upper;
        const TailDiag diag = diagnose_tail(s.cps, D);
        if (diag.bounded || diag.flux_stalled) return ProbeSide::Lower;
        return ProbeSide::Growing;
    } catch (const trajectory_invalid&) {
        return ProbeSide::Lower;  // fell to u=0: certainly not blowing up
    }
}

Classification probe_label(ProbeSide s) {
    switch (s) {
        case ProbeSide::Upper: return Classification::FiniteRadiusBlowup;
        case ProbeSide::Lower: return Classification::BoundedLimit;
        default: return Classification::Indeterminate;
    }
}

}  // namespace

const char* to_string(Classification c) {
    switch (c) {
        case Classification::BoundedLimit: return "BoundedLimit";
        case Classification::EntireLarge: return "EntireLarge";
        case Classification::FiniteRadiusBlowup: return "FiniteRadiusBlowup";
        default: return "Indeterminate";
    }
}

RadialSolution integrate_ivp(const nonlin::Nonlinearity& nl,
                             const pot::RadialPotential& pot, double u0,
                             double du0, const ShootingConfig& cfg) {
    const double r0 = resolve_r0(pot, cfg);
    validate_cfg(cfg, r0);
    SweepResult s =
        sweep(nl, pot, pot.D, r0, u0, du0, cfg.r_max, cfg, true, true);
    RadialSolution sol = std::move(s.sol);
    if (s.blew_up) return sol;

    const TailDiag diag = diagnose_tail(s.cps, pot.D);
    if (diag.bounded) {
        sol.classification = Classification::BoundedLimit;
        sol.beta = diag.beta;
        return sol;
    }
    sol.classification =
        exceeds_bounded_family(nl, pot, s.r_last, s.u_last)
            ? Classification::EntireLarge
            : Classification::Indeterminate;
    return sol;
}

RadialSolution find_els(const nonlin::Nonlinearity& nl,
                        const pot::RadialPotential& pot, double u1,
                        const ShootingConfig& cfg, BisectLog* log) {
    if (!(u1 > 0.0))
        throw std::invalid_argument("separatrix search needs u(r0) > 0");
    if (pot.natural_start != 1.0)
        throw std::invalid_argument(
            "separatrix search expects a tail-normalized density (data at "
            "r=1)");
    const double r0 = resolve_r0(pot, cfg);
    validate_cfg(cfg, r0);
    const int D = pot.D;

    double horizon = cfg.probe_horizon;  // sticky escalation
    const auto probe = [&](double b) -> ProbeSide {
        for (;;) {
            const ProbeSide s =
                probe_side(nl, pot, D, r0, u1, b, horizon, cfg);
            if (s != ProbeSide::Growing || horizon >= cfg.probe_horizon_max) {
                if (log) log->probes.push_back({b, probe_label(s), horizon});
                return s;
            }
            horizon = std::min(horizon * 10.0, cfg.probe_horizon_max);
        }
    };

    double hi = std::max(1.0, u1);
    ProbeSide side_hi = probe(hi);
    int guard = 0;
    while (side_hi != ProbeSide::Upper) {
        hi *= 2.0;
        if (++guard > 60)
            throw numerical_error(
                "no blow-up bracket found: every probed slope stays bounded "
                "(last classified " +
                std::string(to_string(probe_label(side_hi))) + ")");
        side_hi = probe(hi);
    }
    double lo = 0.0;
    ProbeSide side_lo = probe(lo);
    if (side_lo == ProbeSide::Upper) {
        lo = -std::max(1.0, u1);
        guard = 0;
        while ((side_lo = probe(lo)) == ProbeSide::Upper) {
            lo *= 2.0;
            if (++guard > 60)
                throw numerical_error(
                    "no bounded bracket found: every probed slope blows up "
                    "(last classified FiniteRadiusBlowup)");
        }
    }

    int iters = 0;
    while (hi - lo > 1e-12 * std::max({std::abs(hi), std::abs(lo), 1e-30}) &&
           iters < cfg.max_bisect) {
        const double mid = 0.5 * (lo + hi);
        const ProbeSide s = probe(mid);
        if (s == ProbeSide::Upper)
            hi = mid;
        else
            lo = mid;  // Lower, or undecided: shrink toward the blow-up side
        ++iters;
    }
    const double b_star = 0.5 * (lo + hi);
    if (log) {
        log->lo = lo;
        log->hi = hi;
        log->width = hi - lo;
    }

    ShootingConfig fc = cfg;
    fc.r0 = r0;
    RadialSolution sol = integrate_ivp(nl, pot, u1, b_star, fc);
    if (sol.classification == Classification::FiniteRadiusBlowup)
        sol = integrate_ivp(nl, pot, u1, lo, fc);
    return sol;
}

RadialSolution find_bounded(const nonlin::Nonlinearity& nl,
                            const pot::RadialPotential& pot, double beta,
                            const ShootingConfig& cfg, BisectLog* log) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("target limit must be positive and finite");
    const double r0 = cfg.r0 >= 0.0 ? cfg.r0 : 0.0;
    if (!pot.regular_at_zero && r0 == 0.0)
        throw std::invalid_argument(
            "bounded-limit search from the center needs a density regular at "
            "0");
    validate_cfg(cfg, r0);
    const int D = pot.D;
    const double tol_beta = 1e-6 * std::max(1.0, std::abs(beta));

    // limit(u0): +inf when the trajectory is not bounded.
    const auto limit_of = [&](double u0) -> double {
        try {
            SweepResult s =
                sweep(nl, pot, D, r0, u0, 0.0, cfg.r_max, cfg, false, false);
            if (s.blew_up) return kInf;
            const TailDiag diag = diagnose_tail(s.cps, D);
            if (log)
                log->probes.push_back({u0,
                                       diag.bounded
                                           ? Classification::BoundedLimit
                                           : Classification::Indeterminate,
                                       cfg.r_max});
            return diag.bounded ? diag.beta : kInf;
        } catch (const trajectory_invalid&) {
            return 0.0;  // fell to zero: limit below any positive target
        }
    };

    double hi = beta;  // limit(u0) >= u0, so u0 = beta lands at or above beta
    double lo = 0.5 * beta;
    int guard = 0;
    while (limit_of(lo) >= beta - tol_beta) {
        hi = lo;
        lo *= 0.5;
        if (++guard > 200)
            throw numerical_error(
                "no lower bracket: trajectories approach the target limit "
                "from above for arbitrarily small centers");
    }

    double best_u0 = lo;
    double best_gap = kInf;
    for (int it = 0; it < cfg.max_bisect; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double lim = limit_of(mid);
        const double gap = std::abs(lim - beta);
        if (std::isfinite(lim) && gap < best_gap) {
            best_gap = gap;
            best_u0 = mid;
        }
        if (gap <= tol_beta) break;
        if (lim > beta)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= 1e-15 * hi && best_gap > tol_beta)
            throw numerical_error(
                "target limit unreachable: the center-value bracket collapsed "
                "at gap " +
                std::to_string(best_gap));
    }
    if (best_gap > tol_beta)
        throw numerical_error(
            "target limit not attained within the bisection budget (best gap " +
            std::to_string(best_gap) + ")");
    if (log) {
        log->lo = lo;
        log->hi = hi;
        log->width = hi - lo;
    }
    ShootingConfig fc = cfg;
    fc.r0 = r0;
    return integrate_ivp(nl, pot, best_u0, 0.0, fc);
}

RadialSolution boundary_blowup_ball(const nonlin::Nonlinearity& nl, double m,
                                    double R, int D, const ShootingConfig& cfg,
                                    BisectLog* log) {
    if (!(m > 0.0) || !(R > 0.0))
        throw std::invalid_argument("density level and radius must be positive");
    if (D < 3) throw std::invalid_argument("ball problems require D >= 3");
    const auto ko = nonlin::ko_integral(nl, 1.0);
    if (ko.kind == num::Convergence::Divergent)
        throw numerical_error(
            "no finite-radius blow-up: the superlinearity integral diverges "
            "for '" +
            nl.key + "'");

    pot::RadialPotential ball;
    ball.key = "const:m=" + std::to_string(m);
    ball.D = D;
    ball.alpha = 0.0;
    ball.rho = [m](double) { return m; };
    ball.regular_at_zero = true;
    ball.natural_start = 0.0;
    const double Dd = static_cast<double>(D);
    ball.mass_closed = [m, Dd](double s) {
        return m * std::pow(s, Dd) / Dd;
    };

    ShootingConfig pc = cfg;
    pc.r0 = 0.0;
    pc.r_max = 100.0 * R;
    validate_cfg(pc, 0.0);

    // r*(u0): +inf when no blow-up happens within the probe span.
    const auto rstar_of = [&](double u0) -> double {
        SweepResult s =
            sweep(nl, ball, D, 0.0, u0, 0.0, pc.r_max, pc, false, true);
        const double rs = s.blew_up ? s.sol.r_star : kInf;
        if (log)
            log->probes.push_back({u0,
                                   s.blew_up
                                       ? Classification::FiniteRadiusBlowup
                                       : Classification::Indeterminate,
                                   s.blew_up ? rs : pc.r_max});
        return rs;
    };

    double hi = 1.0, lo = 1.0;
    int guard = 0;
    if (rstar_of(1.0) > R) {
        while (rstar_of(hi *= 4.0) > R)
            if (++guard > 200)
                throw numerical_error("no center value blows up by R");
        lo = hi / 4.0;
    } else {
        while (rstar_of(lo /= 4.0) <= R)
            if (++guard > 200)
                throw numerical_error(
                    "every center value blows up inside R");
        hi = lo * 4.0;
    }

    double best_u0 = hi;
    double best_gap = kInf;
    for (int it = 0; it < cfg.max_bisect; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rs = rstar_of(mid);
        const double gap = std::isfinite(rs) ? std::abs(rs - R) : kInf;
        if (gap < best_gap) {
            best_gap = gap;
            best_u0 = mid;
        }
        if (gap <= 1e-8 * R) break;
        if (rs > R)
            lo = mid;  // too small a center: blow-up beyond R
        else
            hi = mid;
    }
    if (best_gap > 1e-8 * R)
        throw numerical_error(
            "blow-up radius not matched to tolerance (best gap " +
            std::to_string(best_gap) + ")");
    if (log) {
        log->lo = lo;
        log->hi = hi;
        log->width = hi - lo;
    }
    SweepResult s =
        sweep(nl, ball, D, 0.0, best_u0, 0.0, pc.r_max, pc, true, true);
    RadialSolution sol = std::move(s.sol);
    sol.D = D;
    return sol;
}

namespace {

std::size_t locate_segment(const RadialSolution& sol, double r) {
    const auto& g = sol.r_grid;
    if (g.size() < 2)
        throw std::invalid_argument("solution grid too short to evaluate");
    const double span = g.back() - g.front();
    if (r < g.front() - 1e-12 * span || r > g.back() + 1e-12 * span)
        throw std::invalid_argument("evaluation radius outside the grid");
    const auto it = std::upper_bound(g.begin(), g.end(), r);
    std::size_t i = it == g.begin() ? 0 : (it - g.begin()) - 1;
    if (i + 1 >= g.size()) i = g.size() - 2;
    return i;
}

}  // namespace

double eval_u(const RadialSolution& sol, double r) {
    const std::size_t i = locate_segment(sol, r);
    return hermite5(sol.r_grid[i], sol.u_grid[i], sol.du_grid[i],
                    sol.ddu_grid[i], sol.r_grid[i + 1], sol.u_grid[i + 1],
                    sol.du_grid[i + 1], sol.ddu_grid[i + 1], r, false);
}

double eval_du(const RadialSolution& sol, double r) {
    const std::size_t i = locate_segment(sol, r);
    return hermite5(sol.r_grid[i], sol.u_grid[i], sol.du_grid[i],
                    sol.ddu_grid[i], sol.r_grid[i + 1], sol.u_grid[i + 1],
                    sol.du_grid[i + 1], sol.ddu_grid[i + 1], r, true);
}

}  // namespace elslab::shoot
