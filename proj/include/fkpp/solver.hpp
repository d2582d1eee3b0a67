#pragma once

// Time integration of u_t + (-Delta)^a u = f(u) in mild form, by the exponential
// midpoint rule
//   u_mid = T_{dt/2} u + (dt/2) f(u),   u_next = T_dt u + dt T_{dt/2} f(u_mid),
// evaluated as u_next = T_{dt/2} (T_{dt/2} u + dt f(u_mid)).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fkpp/error.hpp"
#include "fkpp/field.hpp"
#include "fkpp/quadrature.hpp"
#include "fkpp/semigroup.hpp"

namespace fkpp {

// Concave reaction term with f(0) = f(1) = 0. Arguments are clamped to [0, 1].
class KppNonlinearity {
public:
    enum class Kind { Logistic, Custom };

    // f(u) = rate u (1 - u)
    static KppNonlinearity logistic(double rate = 1.0) {
        if (!(rate > 0.0)) throw DomainError("logistic rate must be positive");
        KppNonlinearity f;
        f.kind_ = Kind::Logistic;
        f.rate_ = rate;
        f.fprime0_ = rate;
        f.fprime1_ = -rate;
        return f;
    }

    // Piecewise-linear f through values on the uniform partition of [0, 1].
    static KppNonlinearity custom(std::vector<double> table) {
        if (table.size() < 3) throw DomainError("custom nonlinearity needs at least 3 table values");
        if (table.front() != 0.0 || table.back() != 0.0) throw DomainError("custom nonlinearity needs f(0) = f(1) = 0");
        for (std::size_t i = 1; i + 1 < table.size(); ++i) {
            if (table[i - 1] - 2.0 * table[i] + table[i + 1] > 1e-14)
                throw DomainError("custom nonlinearity is not concave");
        }
        KppNonlinearity f;
        f.kind_ = Kind::Custom;
        const double m = static_cast<double>(table.size() - 1);
        f.fprime0_ = table[1] * m;
        f.fprime1_ = -table[table.size() - 2] * m;
        if (!(f.fprime0_ > 0.0) || !(f.fprime1_ < 0.0)) throw DomainError("custom nonlinearity needs f'(1) < 0 < f'(0)");
        f.table_ = std::move(table);
        return f;
    }

    Kind kind() const { return kind_; }
    double rate() const { return rate_; }
    const std::vector<double>& table() const { return table_; }
    double fprime0() const { return fprime0_; }
    double fprime1() const { return fprime1_; }
    // max |f'| on [0, 1]; concavity puts it at an endpoint.
    double lipschitz() const { return std::max(fprime0_, -fprime1_); }

    double operator()(double u) const {
        u = std::clamp(u, 0.0, 1.0);
        if (kind_ == Kind::Logistic) return rate_ * u * (1.0 - u);
        const double s = u * static_cast<double>(table_.size() - 1);
        const auto i = std::min(static_cast<std::size_t>(s), table_.size() - 2);
        const double w = s - static_cast<double>(i);
        return (1.0 - w) * table_[i] + w * table_[i + 1];
    }

    bool operator==(const KppNonlinearity& o) const {
        return kind_ == o.kind_ && rate_ == o.rate_ && table_ == o.table_;
    }

private:
    Kind kind_ = Kind::Logistic;
    double rate_ = 1.0;
    std::vector<double> table_;
    double fprime0_ = 1.0;
    double fprime1_ = -1.0;
};

// phi_l(t) for phi' = phi (1 - phi), phi(0) = l.
inline double logistic_closed_form(double l, double t) {
    if (!(l > 0.0 && l <= 1.0)) throw DomainError("logistic initial value must lie in (0, 1]");
    if (!(t >= 0.0)) throw DomainError("logistic time must be nonnegative");
    return 1.0 / (1.0 + (1.0 - l) / l * std::exp(-t));
}

struct EvolveSchedule {
    double dt = 0.01;
    double t_end = 0.0;
    std::vector<double> snapshot_times;

    void validate(const KppNonlinearity& f) const {
        if (!(dt > 0.0)) throw DomainError("time step must be positive");
        if (dt > 0.1 / f.lipschitz() * (1.0 + 1e-12)) throw DomainError("time step exceeds 0.1 / max|f'|");
        if (!(t_end >= 0.0)) throw DomainError("end time must be nonnegative");
        for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
            if (snapshot_times[i] < 0.0 || snapshot_times[i] > t_end * (1.0 + 1e-12))
                throw DomainError("snapshot times must lie in [0, t_end]");
            if (i > 0 && snapshot_times[i] < snapshot_times[i - 1]) throw DomainError("snapshot times must be sorted");
        }
    }
    std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }
    // Comparison slack 10 dt^2 per unit time.
    double eps_cmp(double t) const { return 10.0 * dt * dt * t; }
};

struct SolutionTrajectory {
    std::vector<Field> snapshots;
    EvolveSchedule schedule;
    KppNonlinearity nonlinearity;
    double alpha = 0.5;
    double max_overshoot = 0.0;  // largest distance outside [0, 1] removed by clamping
    std::size_t steps = 0;

    // Snapshot whose time is nearest to t.
    const Field& at(double t) const {
        if (snapshots.empty()) throw DomainError("trajectory has no snapshots");
        auto best = snapshots.begin();
        for (auto it = snapshots.begin(); it != snapshots.end(); ++it)
            if (std::abs(it->time - t) < std::abs(best->time - t)) best = it;
        return *best;
    }
};

// ---------------------------------------------------------------------------
// Field algebra. Constant tails transform exactly; PowerLaw amplitudes are refit.

template <class F>
Field map_field(const Field& u, F&& fn) {
    Field out = u;
    for (auto& v : out.values) v = fn(v);
    if (out.left.is_constant()) out.left.level = fn(out.left.level);
    if (out.right.is_constant()) out.right.level = fn(out.right.level);
    refit_power_tails(out);
    return out;
}

// a x + y
inline Field axpy(double a, const Field& x, const Field& y) {
    if (!(x.grid == y.grid)) throw DomainError("fields live on different grids");
    Field out = y;
    for (std::size_t j = 0; j < out.size(); ++j) out.values[j] += a * x.values[j];
    auto combine = [a](TailModel& o, const TailModel& xt) {
        if (o.is_constant() && xt.is_constant()) {
            o.level += a * xt.level;
        } else if (!o.is_constant() && !xt.is_constant()) {
            o.amplitude += a * xt.amplitude;
        } else if (o.is_constant()) {
            // a decaying tail added to a level: the level dominates far away
        } else {
            o = TailModel::constant(a * xt.level);
        }
    };
    combine(out.left, x.left);
    combine(out.right, x.right);
    refit_power_tails(out);
    return out;
}

inline Field react(const Field& u, const KppNonlinearity& f) {
    return map_field(u, [&f](double v) { return f(v); });
}

namespace detail {
inline void check_step_output(const Field& u) {
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double v = u.values[j];
        if (!std::isfinite(v)) throw BlowUp("non-finite value at x = " + format_double(u.x(j)), u.time);
        if (v < -0.01 || v > 1.01)
            throw RangeViolation("value " + format_double(v) + " at x = " + format_double(u.x(j)) +
                                     " outside [-0.01, 1.01]",
                                 u.time, v);
    }
}
}  // namespace detail

inline Field step_etd1(SpectralFlow& flow, const Field& u, double dt, const KppNonlinearity& f) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    const Field half = flow.apply(u, 0.5 * dt);
    const Field mid = axpy(0.5 * dt, react(u, f), half);
    Field out = flow.apply(axpy(dt, react(mid, f), half), 0.5 * dt);
    out.time = u.time + dt;
    detail::check_step_output(out);
    return out;
}

inline Field step_etd1(const Field& u, double dt, double alpha, const KppNonlinearity& f) {
    SpectralFlow flow(u.grid, KernelSpec::for_alpha(alpha));
    return step_etd1(flow, u, dt, f);
}

// Called after every accepted step (and once for the initial state).
using StepObserver = std::function<void(const Field&)>;

inline SolutionTrajectory evolve(SpectralFlow& flow, const Field& u0, const EvolveSchedule& schedule,
                                 const KppNonlinearity& f, const StepObserver& observer = {}) {
    schedule.validate(f);
    for (double v : u0.values)
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("initial values must lie in [0, 1]");
    SolutionTrajectory traj;
    traj.schedule = schedule;
    traj.nonlinearity = f;
    traj.alpha = flow.alpha();
    const std::size_t n = schedule.steps();
    traj.steps = n;

    // step index of each requested snapshot
    std::vector<std::size_t> wanted;
    for (double ts : schedule.snapshot_times)
        wanted.push_back(static_cast<std::size_t>(std::llround(ts / schedule.dt)));
    std::size_t next = 0;
    auto emit = [&](const Field& u, std::size_t k) {
        while (next < wanted.size() && wanted[next] == k) {
            traj.snapshots.push_back(u);
            ++next;
        }
    };

    Field u = u0;
    if (observer) observer(u);
    emit(u, 0);
    for (std::size_t k = 1; k <= n; ++k) {
        u = step_etd1(flow, u, schedule.dt, f);  // range and blow-up errors carry the time
        u.time = static_cast<double>(k) * schedule.dt;
        double over = 0.0;
        for (auto& v : u.values) {
            over = std::max({over, -v, v - 1.0});
            v = std::clamp(v, 0.0, 1.0);
        }
        for (TailModel* tail : {&u.left, &u.right})
            if (tail->is_constant()) tail->level = std::clamp(tail->level, 0.0, 1.0);
        traj.max_overshoot = std::max(traj.max_overshoot, over);
        if (observer) observer(u);
        emit(u, k);
    }
    return traj;
}

inline SolutionTrajectory evolve(const Field& u0, const EvolveSchedule& schedule, double alpha,
                                 const KppNonlinearity& f) {
    SpectralFlow flow(u0.grid, KernelSpec::for_alpha(alpha));
    return evolve(flow, u0, schedule, f);
}

// ---------------------------------------------------------------------------
// Mild-form checks

// int_0^t T_{t-s} g(s) ds with m Gauss-Legendre panels of 4 points each.
template <class G>
Field mild_integral(SpectralFlow& flow, double t, G&& g, std::size_t m) {
    if (!(t > 0.0) || m == 0) throw DomainError("mild integral needs t > 0 and at least one panel");
    std::optional<Field> acc;
    std::vector<double> s, w;
    for (std::size_t p = 0; p < m; ++p) {
        const double a = t * static_cast<double>(p) / static_cast<double>(m);
        const double b = t * static_cast<double>(p + 1) / static_cast<double>(m);
        quad::gauss_legendre_nodes<4>(a, b, s, w);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const Field term = flow.apply(g(s[i]), t - s[i]);
            acc = acc ? axpy(w[i], term, *acc) : map_field(term, [&](double v) { return w[i] * v; });
        }
    }
    acc->time = t;
    return *acc;
}

// Field at time s by cubic Lagrange interpolation through the four nearest snapshots.
inline Field interpolate_snapshot(const SolutionTrajectory& traj, double s) {
    const auto& snaps = traj.snapshots;
    if (snaps.size() < 4) throw CoverageError("interpolation needs at least four snapshots");
    if (s < snaps.front().time - 1e-12 || s > snaps.back().time + 1e-12)
        throw CoverageError("time " + format_double(s) + " outside the stored snapshots");
    std::size_t i = 0;
    while (i + 1 < snaps.size() && snaps[i + 1].time <= s) ++i;
    const std::size_t lo = std::min(i > 0 ? i - 1 : 0, snaps.size() - 4);
    const double max_gap = 10.0 * traj.schedule.dt;
    for (std::size_t k = lo; k < lo + 3; ++k)
        if (snaps[k + 1].time - snaps[k].time > max_gap * (1.0 + 1e-9))
            throw CoverageError("snapshot gap near t = " + format_double(s) + " exceeds 10 dt");
    std::array<double, 4> L{};
    for (std::size_t a = 0; a < 4; ++a) {
        double v = 1.0;
        for (std::size_t b = 0; b < 4; ++b)
            if (a != b) v *= (s - snaps[lo + b].time) / (snaps[lo + a].time - snaps[lo + b].time);
        L[a] = v;
    }
    Field out = map_field(snaps[lo], [&](double v) { return L[0] * v; });
    for (std::size_t a = 1; a < 4; ++a) out = axpy(L[a], snaps[lo + a], out);
    out.time = s;
    return out;
}

// Interior sup norm of u(t) - [T_t u0 + int_0^t T_{t-s} f(u(s)) ds].
inline double duhamel_residual(SpectralFlow& flow, const SolutionTrajectory& traj, double t, std::size_t m) {
    if (m < 8) throw DomainError("duhamel_residual needs at least 8 panels");
    if (traj.snapshots.empty()) throw CoverageError("trajectory has no snapshots");
    const Field& u0 = traj.snapshots.front();
    const Field& ut = traj.at(t);
    if (std::abs(ut.time - t) > 0.5 * traj.schedule.dt) throw CoverageError("no snapshot at t = " + format_double(t));
    t = ut.time;
    Field rhs = flow.apply(u0, t);
    const Field I = mild_integral(
        flow, t, [&](double s) { return react(interpolate_snapshot(traj, s), traj.nonlinearity); }, m);
    rhs = axpy(1.0, I, rhs);
    double r = 0.0;
    for (std::size_t j = 0; j < ut.size(); ++j)
        if (ut.grid.interior(j)) r = std::max(r, std::abs(ut.values[j] - rhs.values[j]));
    return r;
}

inline double duhamel_residual(const SolutionTrajectory& traj, double t, std::size_t m) {
    if (traj.snapshots.empty()) throw CoverageError("trajectory has no snapshots");
    SpectralFlow flow(traj.snapshots.front().grid, KernelSpec::for_alpha(traj.alpha));
    return duhamel_residual(flow, traj, t, m);
}

// ---------------------------------------------------------------------------
// Operator evaluation

inline Field frac_laplacian(const Field& u, double alpha) {
    SpectralFlow flow(u.grid, KernelSpec::for_alpha(alpha));
    return flow.frac_laplacian(u);
}

}  // namespace fkpp
