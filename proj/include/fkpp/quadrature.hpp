#pragma once

// Adaptive Gauss-Kronrod integration with explicit absolute and L1-relative
// tolerances, plus the variable substitutions used for heavy-tailed integrands.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fkpp/error.hpp"

namespace fkpp::quad {

struct Tolerance {
    double abs = 1e-15;
    double rel = 1e-12;     // relative to |integral|
    double rel_l1 = 0.0;    // relative to the integral of |f|; useful under cancellation
    int max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    double l1 = 0.0;
    int intervals = 0;
    bool converged = true;
};

namespace detail {

struct Panel {
    double a, b, value, error, l1;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    using G = boost::math::quadrature::gauss<double, 7>;
    const auto& xk = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = G::weights();
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    double fc = f(c);
    double kron = wk[0] * fc;
    double gauss = wg[0] * fc;
    double l1 = wk[0] * std::abs(fc);
    for (std::size_t i = 1; i < xk.size(); ++i) {
        double f1 = f(c - r * xk[i]);
        double f2 = f(c + r * xk[i]);
        kron += wk[i] * (f1 + f2);
        l1 += wk[i] * (std::abs(f1) + std::abs(f2));
        if (i % 2 == 0) gauss += wg[i / 2] * (f1 + f2);
    }
    Panel p{a, b, kron * r, std::abs((kron - gauss) * r), l1 * std::abs(r)};
    // Roundoff floor: the estimate cannot resolve below a few ulps of the panel's L1 mass.
    p.error = std::max(p.error, 10.0 * std::numeric_limits<double>::epsilon() * p.l1);
    return p;
}

}  // namespace detail

// Integrates f over the union of consecutive intervals [pts[i], pts[i+1]].
template <class F>
Result integrate_pts(F&& f, const std::vector<double>& pts, const Tolerance& tol = {}) {
    std::priority_queue<detail::Panel> heap;
    Result res;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (!(pts[i + 1] > pts[i])) continue;
        detail::Panel p = detail::gk15(f, pts[i], pts[i + 1]);
        res.value += p.value;
        res.error += p.error;
        res.l1 += p.l1;
        heap.push(p);
    }
    res.intervals = static_cast<int>(heap.size());
    auto target = [&] {
        return std::max({tol.abs, tol.rel * std::abs(res.value), tol.rel_l1 * res.l1});
    };
    while (!heap.empty() && res.error > target()) {
        if (res.intervals >= tol.max_intervals) {
            res.converged = false;
            break;
        }
        detail::Panel p = heap.top();
        double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) {
            res.converged = false;
            break;
        }
        heap.pop();
        detail::Panel l = detail::gk15(f, p.a, mid);
        detail::Panel r = detail::gk15(f, mid, p.b);
        res.value += l.value + r.value - p.value;
        res.error += l.error + r.error - p.error;
        res.l1 += l.l1 + r.l1 - p.l1;
        heap.push(l);
        heap.push(r);
        ++res.intervals;
    }
    // Re-sum to shed accumulated update rounding.
    if (!heap.empty()) {
        double v = 0, e = 0, l1 = 0;
        std::vector<detail::Panel> all;
        all.reserve(heap.size());
        while (!heap.empty()) {
            all.push_back(heap.top());
            heap.pop();
        }
        std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
        for (const auto& p : all) {
            v += p.value;
            e += p.error;
            l1 += p.l1;
        }
        res.value = v;
        res.error = e;
        res.l1 = l1;
        if (res.error <= target()) res.converged = true;
    }
    return res;
}

template <class F>
Result integrate(F&& f, double a, double b, const Tolerance& tol = {}) {
    return integrate_pts(f, {a, b}, tol);
}

// Integral over [a, inf) of f with f(z) ~ z^(-1-kappa): substituting z = a u^(-1/kappa)
// turns the algebraic tail into a nearly flat integrand on (0, 1]. Requires a > 0.
template <class F>
Result integrate_power_tail(F&& f, double a, double kappa, const Tolerance& tol = {}) {
    const double m = 1.0 / kappa;
    auto g = [&](double u) -> double {
        if (u <= 0.0) return 0.0;
        double z = a * std::pow(u, -m);
        if (!std::isfinite(z)) return 0.0;
        return f(z) * a * m * std::pow(u, -m - 1.0);
    };
    // Breakpoints cluster near u = 1, where the mapped integrand carries the
    // structure of f on the scale of a.
    std::vector<double> pts{0.0};
    for (double u : {1e-8, 1e-4, 0.01, 0.1, 0.3, 0.6, 0.85, 0.95, 0.99}) pts.push_back(u);
    pts.push_back(1.0);
    return integrate_pts(g, pts, tol);
}

// Geometric breakpoints a, a+s, a+2s, a+4s, ... up to b; resolves integrands whose
// structure sits near the left end on scale s.
inline std::vector<double> graded_points(double a, double b, double s) {
    std::vector<double> pts{a};
    if (s > 0) {
        for (double w = s; a + w < b; w *= 4.0) pts.push_back(a + w);
    }
    pts.push_back(b);
    return pts;
}

inline void require(const Result& r, const char* what) {
    if (!r.converged || !std::isfinite(r.value)) {
        std::ostringstream os;
        os << what << ": quadrature did not converge (estimated error " << r.error << ")";
        throw NumericError(os.str(), r.error);
    }
}

// Fixed n-point Gauss-Legendre rule on [a, b].
template <int N, class F>
double gauss_legendre(F&& f, double a, double b) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            s += w[i] * f(c);
        } else {
            s += w[i] * (f(c - r * x[i]) + f(c + r * x[i]));
        }
    }
    return s * r;
}

// Nodes and weights of the n-point Gauss-Legendre rule on [a, b].
template <int N>
void gauss_legendre_nodes(double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    nodes.clear();
    weights.clear();
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] == 0.0) continue;
        nodes.push_back(c - r * x[i]);
        weights.push_back(r * w[i]);
    }
    if (N % 2 == 1) {
        nodes.push_back(c);
        weights.push_back(r * w[0]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) continue;
        nodes.push_back(c + r * x[i]);
        weights.push_back(r * w[i]);
    }
}

}  // namespace fkpp::quad
