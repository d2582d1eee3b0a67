#pragma once

// Explicit sub/supersolutions u = a / (1 + x^2 / b(t)^2), b(t) = (1 + b0) e^{t/2} - 1,
// for alpha = 1/2 and f(u) = u(1 - u), plus the marker iterations behind the exponential
// lower bounds.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fkpp/error.hpp"
#include "fkpp/field.hpp"
#include "fkpp/semigroup.hpp"
#include "fkpp/solver.hpp"

namespace fkpp {

enum class EnvelopeRole { Sub, Super };

inline const char* to_string(EnvelopeRole r) { return r == EnvelopeRole::Sub ? "sub" : "super"; }

struct ExplicitEnvelope {
    double a = 1.0;
    double b0 = 2.0;
    EnvelopeRole role = EnvelopeRole::Super;

    void validate() const {
        if (!(a > 0.0)) throw DomainError("envelope amplitude must be positive");
        if (!(b0 > 1.0)) throw DomainError("envelope width b0 must exceed 1");
        if (role == EnvelopeRole::Sub && a > (b0 - 1.0) / b0 * (1.0 + 1e-15))
            throw DomainError("a subsolution needs a <= (b0 - 1) / b0");
        if (role == EnvelopeRole::Super && a < 1.0) throw DomainError("a supersolution needs a >= 1");
    }
    double b(double t) const { return (1.0 + b0) * std::exp(0.5 * t) - 1.0; }
};

inline double explicit_envelope_value(const ExplicitEnvelope& env, double t, double x) {
    const double b = env.b(t);
    return env.a / (1.0 + x * x / (b * b));
}

// a^{-1} (1 + x^2/b^2)^2 (u_t + (-Delta)^{1/2} u - u + u^2) = 1/b - 1 + a
inline double envelope_residual_factor(const ExplicitEnvelope& env, double t) { return 1.0 / env.b(t) - 1.0 + env.a; }

inline Field envelope_field(const ExplicitEnvelope& env, const GridSpec& grid, double t) {
    const double b = env.b(t);
    auto f = sample_field(grid, [&](double x) { return explicit_envelope_value(env, t, x); },
                          TailModel::power_law(env.a * b * b, 2.0), TailModel::power_law(env.a * b * b, 2.0), t);
    return f;
}

struct EnvelopeProbe {
    double t = 0.0;
    double x = 0.0;
    double numeric = 0.0;   // u_t + (-Delta)^{1/2} u - u(1 - u)
    double expected = 0.0;  // a (1 + x^2/b^2)^{-2} (1/b - 1 + a)
};

struct EnvelopeReport {
    ExplicitEnvelope envelope;
    std::vector<EnvelopeProbe> probes;
    double tolerance = 0.0;    // 1e-4 a
    double worst_error = 0.0;  // max |numeric - expected|
    EnvelopeProbe worst;
    bool signs_ok = true;
    bool pass = false;
};

inline std::vector<double> default_envelope_probe_times() { return {0.0, 0.5, 1.0, 2.0, 4.0}; }
inline std::vector<double> default_envelope_probe_positions() { return {0, 1, -1, 5, -5, 20, -20, 100, -100}; }

// Residual of the envelope through the solver's operator; u_t by a fourth-order
// centred difference in t with step 0.01.
inline EnvelopeReport verify_envelope_numerically(const ExplicitEnvelope& env, const GridSpec& grid,
                                                  const std::vector<double>& times,
                                                  const std::vector<double>& positions) {
    env.validate();
    for (double x : positions)
        if (std::abs(x) > grid.interior_limit()) throw DomainError("envelope probe outside the interior");
    SpectralFlow flow(grid, KernelSpec::for_alpha(0.5));
    EnvelopeReport rep;
    rep.envelope = env;
    rep.tolerance = 1e-4 * env.a;
    const double d = 0.01;
    for (double t : times) {
        const Field u = envelope_field(env, grid, t);
        const Field lap = flow.frac_laplacian(u);
        for (double x : positions) {
            const std::size_t j = grid.index_of(x);
            const double xj = grid.node(j);
            auto v = [&](double s) { return explicit_envelope_value(env, s, xj); };
            const double ut = (8.0 * (v(t + d) - v(t - d)) - (v(t + 2 * d) - v(t - 2 * d))) / (12.0 * d);
            const double uj = u.values[j];
            EnvelopeProbe p;
            p.t = t;
            p.x = xj;
            p.numeric = ut + lap.values[j] - uj * (1.0 - uj);
            const double w = 1.0 + xj * xj / (env.b(t) * env.b(t));
            p.expected = env.a / (w * w) * envelope_residual_factor(env, t);
            const double err = std::abs(p.numeric - p.expected);
            if (err >= rep.worst_error) {
                rep.worst_error = err;
                rep.worst = p;
            }
            if (env.role == EnvelopeRole::Sub && p.numeric > rep.tolerance) rep.signs_ok = false;
            if (env.role == EnvelopeRole::Super && p.numeric < -rep.tolerance) rep.signs_ok = false;
            rep.probes.push_back(p);
        }
    }
    rep.pass = rep.signs_ok && rep.worst_error <= rep.tolerance;
    return rep;
}

// e^{f'(0) t} T_t u0
inline Field linear_supersolution(SpectralFlow& flow, const Field& u0, double t, double fprime0) {
    if (!(t > 0.0)) throw DomainError("linear supersolution needs t > 0");
    if (fprime0 * t > 300.0) throw RangeViolation("growth factor e^{f'(0) t} overflows", t, fprime0 * t);
    const double g = std::exp(fprime0 * t);
    return map_field(flow.apply(u0, t), [g](double v) { return g * v; });
}

// Smallest a >= 1 with u0 <= a / (1 + x^2/b0^2) on the box and on the tail models.
inline ExplicitEnvelope fit_super_envelope(const Field& u0, double b0) {
    double a = 1.0;
    for (std::size_t j = 0; j < u0.size(); ++j) {
        const double x = u0.x(j);
        a = std::max(a, u0.values[j] * (1.0 + x * x / (b0 * b0)));
    }
    for (const TailModel* t : {&u0.left, &u0.right}) {
        if (t->is_constant()) {
            if (t->level > 0.0) throw DomainError("a decaying supersolution cannot dominate a constant tail");
        } else if (t->exponent < 2.0 && t->amplitude > 0.0) {
            throw DomainError("tail decays slower than |x|^-2");
        } else if (t->exponent == 2.0) {
            a = std::max(a, t->amplitude / (b0 * b0));
        }
    }
    return {a * (1.0 + 1e-12), b0, EnvelopeRole::Super};
}

// Subsolution (c/T) / (1 + x^2/T^2) below u(T, .): c is the largest constant with
// u(T, x) >= (c/T) / (1 + x^2/T^2) on the box and on the tails, capped below T - 1.
inline ExplicitEnvelope fit_sub_envelope(const Field& uT, double T) {
    if (!(T >= 2.0)) throw DomainError("subsolution seed time must be at least 2");
    double c = (T - 1.0) * (1.0 - 1e-9);
    for (std::size_t j = 0; j < uT.size(); ++j) {
        const double x = uT.x(j);
        c = std::min(c, uT.values[j] * T * (1.0 + x * x / (T * T)));
    }
    for (const TailModel* t : {&uT.left, &uT.right}) {
        if (t->is_constant()) continue;
        if (t->exponent > 2.0) throw DomainError("tail decays faster than |x|^-2");
        if (t->exponent == 2.0) c = std::min(c, t->amplitude / T);
    }
    if (!(c > 0.0)) throw DomainError("field is not positive enough for a subsolution");
    return {c * (1.0 - 1e-12) / T, T, EnvelopeRole::Sub};
}

// ---------------------------------------------------------------------------
// Marker iterations

enum class IterationKind { Decaying, Monotone };

inline const char* to_string(IterationKind k) { return k == IterationKind::Decaying ? "decaying" : "monotone"; }

struct EnvelopeSchedule {
    double t0 = 0.0;
    double eps0 = 0.0;
    double delta = 0.0;
    double delta_max = 0.0;  // supremum of admissible delta
};

// Decay exponent D of the data class: n + 2a (decaying) or 2a (monotone).
inline double class_exponent(IterationKind kind, double alpha, int n) {
    return kind == IterationKind::Decaying ? n + 2.0 * alpha : 2.0 * alpha;
}

// (c t / (t^{n/2a + 1} + 1))^{1/D}
inline double spreading_factor(double c, double t, double alpha, int n, double D) {
    return std::pow(c * t / (std::pow(t, n / (2.0 * alpha) + 1.0) + 1.0), 1.0 / D);
}

// delta: midpoint of (0, delta_max) with f(delta_max)/delta_max = D (sigma + f'(0)/D) / 2.
// t0: first point of the 0.1-spaced scan from 1 with
//     spreading_factor(c, t0) e^{(sigma + f'(0)/D) t0 / 2} >= e^{sigma t0}.
inline EnvelopeSchedule compute_schedule(IterationKind kind, double alpha, int n, const KppNonlinearity& f,
                                         double sigma, double c_meas) {
    const double D = class_exponent(kind, alpha, n);
    const double sigma_crit = f.fprime0() / D;
    if (!(sigma > 0.0 && sigma < sigma_crit)) throw DomainError("sigma must lie in (0, f'(0)/D)");
    if (!(c_meas > 0.0)) throw DomainError("c_meas must be positive");
    const double mid = 0.5 * (sigma + sigma_crit);
    const double target = D * mid;
    auto ratio = [&](double d) { return f(d) / d; };
    double lo = 0.0, hi = 1.0;  // ratio(lo) > target >= ratio(hi)
    if (ratio(hi) > target) {
        lo = hi;
    } else {
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (lo + hi);
            (m > 0.0 && ratio(m) > target ? lo : hi) = m;
        }
    }
    EnvelopeSchedule s;
    s.delta_max = lo;
    s.delta = 0.5 * lo;
    if (!(s.delta > 0.0)) throw ScheduleInfeasible("no admissible delta");
    for (int i = 0; i <= 9990; ++i) {
        const double t = 1.0 + 0.1 * i;
        if (std::log(spreading_factor(c_meas, t, alpha, n, D)) + (mid - sigma) * t >= 0.0) {
            s.t0 = t;
            s.eps0 = s.delta * std::exp(-f.fprime0() * t);
            return s;
        }
    }
    throw ScheduleInfeasible("no t0 <= 1000 satisfies the spreading condition; c_meas too small?");
}

inline EnvelopeSchedule compute_expr_schedule(double alpha, int n, const KppNonlinearity& f, double sigma,
                                              double c_meas) {
    return compute_schedule(IterationKind::Decaying, alpha, n, f, sigma, c_meas);
}

inline EnvelopeSchedule compute_expi_schedule(double alpha, const KppNonlinearity& f, double sigma, double c_meas) {
    return compute_schedule(IterationKind::Monotone, alpha, 1, f, sigma, c_meas);
}

struct EnvelopeIterationState {
    IterationKind kind = IterationKind::Decaying;
    double alpha = 0.5;
    int n = 1;
    double t0 = 1.0;
    double eps = 0.0;
    double sigma = 0.0;
    double delta = 0.0;
    double growth = 0.0;  // f(delta) / delta
    double c_meas = 0.0;
    std::vector<double> markers;     // r_k > 0 (decaying) or x_k < 0 (monotone)
    std::vector<double> amplitudes;  // a_k = eps |marker|^D

    double exponent() const { return class_exponent(kind, alpha, n); }
    // marker ratio per step
    double factor() const {
        const double D = exponent();
        return spreading_factor(c_meas, t0, alpha, n, D) * std::exp(growth * t0 / D);
    }
};

inline EnvelopeIterationState make_iteration_state(IterationKind kind, double alpha, int n, const KppNonlinearity& f,
                                                   double sigma, double c_meas, const EnvelopeSchedule& sched,
                                                   double eps, double marker0) {
    if (!(eps > 0.0 && eps <= sched.eps0 * (1.0 + 1e-12))) throw DomainError("eps must lie in (0, eps0]");
    if (kind == IterationKind::Decaying && !(marker0 >= 1.0)) throw DomainError("r0 must be at least 1");
    if (kind == IterationKind::Monotone && !(marker0 <= -1.0)) throw DomainError("x0 must be at most -1");
    EnvelopeIterationState s;
    s.kind = kind;
    s.alpha = alpha;
    s.n = n;
    s.t0 = sched.t0;
    s.eps = eps;
    s.sigma = sigma;
    s.delta = sched.delta;
    s.growth = f(sched.delta) / sched.delta;
    s.c_meas = c_meas;
    s.markers = {marker0};
    s.amplitudes = {eps * std::pow(std::abs(marker0), s.exponent())};
    return s;
}

namespace detail {
inline EnvelopeIterationState iterate_markers(EnvelopeIterationState s, std::size_t k) {
    const double g = s.factor();
    if (!(g > 1.0)) throw ScheduleInfeasible("marker growth factor " + format_double(g) + " is not above 1");
    if (g < std::exp(s.sigma * s.t0) * (1.0 - 1e-12))
        throw ScheduleInfeasible("marker growth factor is below e^{sigma t0}");
    const double D = s.exponent();
    for (std::size_t i = 0; i < k; ++i) {
        s.markers.push_back(s.markers.back() * g);
        s.amplitudes.push_back(s.eps * std::pow(std::abs(s.markers.back()), D));
    }
    return s;
}
}  // namespace detail

inline EnvelopeIterationState iterate_expr_envelope(const EnvelopeIterationState& s, std::size_t k) {
    if (s.kind != IterationKind::Decaying) throw DomainError("expected a decaying-data state");
    return detail::iterate_markers(s, k);
}

inline EnvelopeIterationState iterate_expi_envelope(const EnvelopeIterationState& s, std::size_t k) {
    if (s.kind != IterationKind::Monotone) throw DomainError("expected a monotone-data state");
    return detail::iterate_markers(s, k);
}

// Datum of the iteration: eps on |x| <= r0 (decaying) or x >= x0 (monotone), power decay
// a0 |x|^-D beyond.
inline Field iteration_datum(const EnvelopeIterationState& s, const GridSpec& grid) {
    const double D = s.exponent(), m0 = s.markers.front(), a0 = s.amplitudes.front();
    if (s.kind == IterationKind::Decaying) {
        return sample_field(grid, [&](double x) { return std::abs(x) <= m0 ? s.eps : a0 * std::pow(std::abs(x), -D); },
                            TailModel::power_law(a0, D), TailModel::power_law(a0, D));
    }
    return sample_field(grid, [&](double x) { return x >= m0 ? s.eps : a0 * std::pow(-x, -D); },
                        TailModel::power_law(a0, D), TailModel::constant(s.eps));
}

// ---------------------------------------------------------------------------

struct OrderingReport {
    bool precondition_ok = false;
    bool pass = false;
    double worst_lower = 0.0;  // max over snapshots of (sub - eps_cmp - u)_+
    double worst_upper = 0.0;  // max of (u - super - eps_cmp)_+
    double worst_time = 0.0;
    double worst_x = 0.0;
    std::string message;
};

using FieldOfTime = std::function<Field(double)>;

inline OrderingReport check_ordering(const FieldOfTime& sub, const SolutionTrajectory& traj, const FieldOfTime& super) {
    OrderingReport rep;
    if (traj.snapshots.empty()) {
        rep.message = "trajectory has no snapshots";
        return rep;
    }
    auto compare = [&](const Field& u, double slack, bool record) {
        const Field lo = sub(u.time), hi = super(u.time);
        double worst = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            if (!u.grid.interior(j)) continue;
            const double dl = lo.values[j] - slack - u.values[j];
            const double du = u.values[j] - hi.values[j] - slack;
            worst = std::max({worst, dl, du});
            if (record && (dl > rep.worst_lower || du > rep.worst_upper)) {
                rep.worst_lower = std::max(rep.worst_lower, dl);
                rep.worst_upper = std::max(rep.worst_upper, du);
                rep.worst_time = u.time;
                rep.worst_x = u.x(j);
            }
        }
        return worst;
    };
    if (compare(traj.snapshots.front(), 0.0, false) > 1e-12) {
        rep.message = "initial ordering sub(0) <= u0 <= super(0) is violated";
        return rep;
    }
    rep.precondition_ok = true;
    for (const auto& u : traj.snapshots) compare(u, traj.schedule.eps_cmp(u.time), true);
    rep.pass = rep.worst_lower <= 0.0 && rep.worst_upper <= 0.0;
    if (!rep.pass) rep.message = "ordering violated beyond eps_cmp";
    return rep;
}

}  // namespace fkpp
