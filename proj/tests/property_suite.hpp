// Solver property checks shared by the unit tests and the acceptance run.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fkpp/solver.hpp"

namespace fkpp::props {

struct Outcome {
    std::string name;
    bool pass = false;
    double measured = 0.0;  // worst violation, or the measured ratio
    std::string detail;
};

struct Setup {
    GridSpec grid{1024, 8192};
    double alpha = 0.5;
    double dt = 0.01;
    double t_end = 1.0;
};

inline EvolveSchedule every_step(double dt, double t_end) {
    EvolveSchedule sch;
    sch.dt = dt;
    sch.t_end = t_end;
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t k = 0; k <= n; ++k) sch.snapshot_times.push_back(static_cast<double>(k) * dt);
    return sch;
}

// Largest interior value of a - b.
inline double max_excess(const Field& a, const Field& b) {
    double m = -HUGE_VAL;
    for (std::size_t j = 0; j < a.size(); ++j)
        if (a.grid.interior(j)) m = std::max(m, a.values[j] - b.values[j]);
    return m;
}

inline Field scaled(const Field& u, double c) {
    return map_field(u, [c](double v) { return std::min(1.0, c * v); });
}

inline Outcome comparison(const Setup& s) {
    SpectralFlow flow(s.grid, KernelSpec::for_alpha(s.alpha));
    const auto f = KppNonlinearity::logistic();
    const Field u0 = canonical_decaying_datum(s.alpha, 1, s.grid);
    const Field v0 = scaled(u0, 2.0);
    const auto sch = every_step(s.dt, s.t_end);
    const auto u = evolve(flow, u0, sch, f), v = evolve(flow, v0, sch, f);
    double worst = -HUGE_VAL;
    bool ok = true;
    for (std::size_t k = 0; k < u.snapshots.size(); ++k) {
        const double e = max_excess(u.snapshots[k], v.snapshots[k]);
        worst = std::max(worst, e);
        ok = ok && e <= sch.eps_cmp(u.snapshots[k].time);
    }
    return {"comparison principle", ok, worst, "max (u - v) over interior nodes and snapshots"};
}

inline Outcome nonlinearity_comparison(const Setup& s) {
    SpectralFlow flow(s.grid, KernelSpec::for_alpha(s.alpha));
    const Field u0 = canonical_decaying_datum(s.alpha, 1, s.grid);
    const auto sch = every_step(s.dt, s.t_end);
    const auto u1 = evolve(flow, u0, sch, KppNonlinearity::logistic(0.8));
    const auto u2 = evolve(flow, u0, sch, KppNonlinearity::logistic(1.0));
    double worst = -HUGE_VAL;
    bool ok = true;
    for (std::size_t k = 0; k < u1.snapshots.size(); ++k) {
        const double e = max_excess(u1.snapshots[k], u2.snapshots[k]);
        worst = std::max(worst, e);
        ok = ok && e <= sch.eps_cmp(u1.snapshots[k].time);
    }
    return {"nonlinearity comparison", ok, worst, "max (u_f1 - u_f2), f1 = 0.8 u(1-u) <= f2 = u(1-u)"};
}

inline Outcome range(const Setup& s) {
    SpectralFlow flow(s.grid, KernelSpec::for_alpha(s.alpha));
    const auto f = KppNonlinearity::logistic();
    const auto sch = every_step(s.dt, s.t_end);
    double worst = 0.0;
    bool ok = true;
    for (const Field& u0 : {scaled(canonical_decaying_datum(s.alpha, 1, s.grid), 4.0), canonical_monotone_datum(s.alpha, s.grid)}) {
        const auto tr = evolve(flow, u0, sch, f);
        worst = std::max(worst, tr.max_overshoot);
        ok = ok && tr.max_overshoot <= std::min(1e-3, sch.eps_cmp(s.t_end));
        for (const auto& snap : tr.snapshots)
            for (double v : snap.values) ok = ok && v >= 0.0 && v <= 1.0;
    }
    return {"range preservation", ok, worst, "largest clamped overshoot"};
}

inline Outcome monotone(const Setup& s) {
    SpectralFlow flow(s.grid, KernelSpec::for_alpha(s.alpha));
    const auto sch = every_step(s.dt, s.t_end);
    const auto tr = evolve(flow, canonical_monotone_datum(s.alpha, s.grid), sch, KppNonlinearity::logistic());
    double worst = 0.0;
    bool ok = true;
    for (const auto& u : tr.snapshots) {
        for (std::size_t j = 1; j < u.size(); ++j) {
            if (!u.grid.interior(j) || !u.grid.interior(j - 1)) continue;
            const double drop = u.values[j - 1] - u.values[j];
            worst = std::max(worst, drop);
            ok = ok && drop <= sch.eps_cmp(u.time);
        }
    }
    return {"monotone preservation", ok, worst, "largest decrease between neighbouring nodes"};
}

inline Outcome radial_monotone(const Setup& s) {
    SpectralFlow flow(s.grid, KernelSpec::for_alpha(s.alpha));
    const Field u0 = canonical_decaying_datum(s.alpha, 1, s.grid);
    const auto lin = check_radial_monotone_preservation(flow, u0, 0.5);
    const auto sch = every_step(s.dt, s.t_end);
    const auto tr = evolve(flow, u0, sch, KppNonlinearity::logistic());
    double asym = 0.0, incr = 0.0;
    bool ok = lin.preserved;
    for (const auto& u : tr.snapshots) {
        double a = 0.0, i = 0.0;
        detail::radial_defects(u, a, i);
        asym = std::max(asym, a);
        incr = std::max(incr, i);
        ok = ok && a <= sch.eps_cmp(u.time) + 1e-9 && i <= sch.eps_cmp(u.time) + 1e-9;
    }
    return {"radial-monotone preservation", ok, std::max({asym, incr, lin.worst_asymmetry, lin.worst_increase}),
            "worst asymmetry or increase in |x|, linear flow and full solution"};
}

inline Outcome kato(const Setup& s) {
    SpectralFlow flow(s.grid, KernelSpec::for_alpha(s.alpha));
    const auto f = KppNonlinearity::logistic();
    Field u0 = canonical_decaying_datum(s.alpha, 1, s.grid);
    const double top = *std::max_element(u0.values.begin(), u0.values.end());
    u0 = scaled(u0, 0.9 / top);
    const auto sch = every_step(s.dt, s.t_end);
    const auto tr = evolve(flow, u0, sch, f);
    double worst = -HUGE_VAL;
    bool ok = true;
    for (double theta : {0.3, 0.6}) {
        auto phi = [theta](double u) {
            const double w = std::max(u - theta, 0.0);
            return w * w / (w + 1.0);
        };
        auto dphi = [theta](double u) {
            const double w = std::max(u - theta, 0.0);
            return (w * w + 2.0 * w) / ((w + 1.0) * (w + 1.0));
        };
        const double t = tr.snapshots.back().time;
        Field rhs = flow.apply(map_field(u0, phi), t);
        const Field I = mild_integral(
            flow, t,
            [&](double sv) {
                return map_field(interpolate_snapshot(tr, sv), [&](double v) { return dphi(v) * f(v); });
            },
            32);
        rhs = axpy(1.0, I, rhs);
        const double e = max_excess(map_field(tr.snapshots.back(), phi), rhs);
        worst = std::max(worst, e);
        ok = ok && e <= sch.eps_cmp(t);
    }
    return {"Kato inequality", ok, worst, "max phi(u(t)) - [T_t phi(u0) + int T phi'(u) f(u)], theta in {0.3, 0.6}"};
}

inline Outcome linearized_growth(const Setup& s) {
    SpectralFlow flow(s.grid, KernelSpec::for_alpha(s.alpha));
    const auto f = KppNonlinearity::logistic();
    const Field u0 = canonical_decaying_datum(s.alpha, 1, s.grid);
    const auto sch = every_step(s.dt, s.t_end);
    const auto tr = evolve(flow, u0, sch, f);
    double worst = -HUGE_VAL;
    bool ok = true;
    for (std::size_t k = 10; k < tr.snapshots.size(); k += 10) {
        const Field& u = tr.snapshots[k];
        const double g = std::exp(f.fprime0() * u.time);
        const Field bound = map_field(flow.apply(u0, u.time), [g](double v) { return g * v; });
        const double e = max_excess(u, bound);
        worst = std::max(worst, e);
        ok = ok && e <= sch.eps_cmp(u.time) * g;
    }
    return {"linearized-growth domination", ok, worst, "max u(t) - e^{f'(0) t} T_t u0"};
}

inline double duhamel_at(const Setup& s, double dt) {
    SpectralFlow flow(s.grid, KernelSpec::for_alpha(s.alpha));
    const auto tr = evolve(flow, canonical_decaying_datum(s.alpha, 1, s.grid), every_step(dt, s.t_end),
                           KppNonlinearity::logistic());
    return duhamel_residual(flow, tr, s.t_end, 32);
}

inline Outcome duhamel_order(const Setup& s) {
    const double r1 = duhamel_at(s, 2.0 * s.dt), r2 = duhamel_at(s, s.dt);
    const double ratio = r1 / r2;
    return {"Duhamel residual O(dt^2)", ratio >= 3.2 && ratio <= 4.8, ratio,
            "residual " + format_double(r1) + " at dt=" + format_double(2 * s.dt) + ", " + format_double(r2) +
                " at dt=" + format_double(s.dt)};
}

inline Outcome uniform_logistic(const Setup& s) {
    SpectralFlow flow(s.grid, KernelSpec::for_alpha(s.alpha));
    EvolveSchedule sch = every_step(s.dt, 5.0);
    double worst = 0.0;
    for (double c : {0.1, 0.5, 0.9}) {
        const Field u0 = sample_field(s.grid, [c](double) { return c; }, TailModel::constant(c), TailModel::constant(c));
        const auto tr = evolve(flow, u0, sch, KppNonlinearity::logistic());
        for (const auto& u : tr.snapshots) {
            const double exact = logistic_closed_form(c, u.time);
            for (double v : u.values) worst = std::max(worst, std::abs(v - exact));
            worst = std::max({worst, std::abs(u.left.level - exact), std::abs(u.right.level - exact)});
        }
    }
    return {"uniform-data logistic exactness", worst <= 1e-4, worst, "max |u - phi_c(t)|, c in {0.1, 0.5, 0.9}, t <= 5"};
}

inline std::vector<Outcome> run_all(const Setup& s = {}) {
    return {comparison(s), nonlinearity_comparison(s), range(s), monotone(s), radial_monotone(s),
            kato(s), linearized_growth(s), duhamel_order(s), uniform_logistic(s)};
}

}  // namespace fkpp::props
