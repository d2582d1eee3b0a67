#pragma once

// The linear flow T_t u = p(t,.) * u on gridded fields with far-field tails.
//
// Spectral backend. A field u is split as u = s + r with the smooth background
//   s(x) = cL + (cR - cL) P(tau, x),   tau = 1,
// where cL, cR are the far levels of the tails (0 for power laws) and P the
// kernel's distribution function. T_t s = cL + (cR - cL) P(tau + t, .) exactly.
// The residual r is known on the box (grid values) and beyond it (tail model
// minus background). Its box part is convolved by a zero-padded FFT whose
// multiplier has the periodic images of the kernel removed, so the discrete
// convolution is the whole-line one. Its exterior part is linear in the tail
// parameters and is added through precomputed unit responses.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "fkpp/error.hpp"
#include "fkpp/fft.hpp"
#include "fkpp/field.hpp"
#include "fkpp/kernels.hpp"
#include "fkpp/parallel.hpp"
#include "fkpp/quadrature.hpp"

namespace fkpp {

namespace detail {

inline quad::Tolerance response_tolerance() {
    quad::Tolerance t;
    t.abs = 1e-300;
    t.rel = 1e-10;
    t.rel_l1 = 1e-13;
    t.max_intervals = 4000;
    return t;
}

// E(d) = int_0^inf k(d + w) phi(B + w) dw for one exterior side, at every node.
// k is the kernel as a function of distance, phi the tail shape as a function of |y|,
// `scale` the length on which k varies near zero, kappa the decay exponent of the
// integrand minus one.
template <class K, class S>
std::vector<double> exterior_response(const GridSpec& g, bool left, const K& kern, const S& shape, double scale,
                                      double kappa) {
    const double B = left ? -g.box_lo() : g.box_hi();
    const double h = g.spacing();
    const auto tol = response_tolerance();
    auto E = [&](double d) {
        auto f = [&](double w) { return kern(d + w) * shape(B + w); };
        const double s = std::max(d, scale);
        const double W = 16.0 * std::max(s, B);
        auto core = quad::integrate_pts(f, quad::graded_points(0.0, W, 0.25 * s), tol);
        quad::require(core, "exterior response");
        auto tail = quad::integrate_power_tail(f, W, kappa, tol);
        quad::require(tail, "exterior response tail");
        return core.value + tail.value;
    };
    const std::size_t N = g.num_points;
    std::vector<double> out(N, 0.0);
    auto dist = [&](std::size_t j) { return left ? g.node(j) - g.box_lo() : g.box_hi() - g.node(j); };

    const double d_direct = 32.0 * h;
    const double d_max = 2.0 * g.half_width + h;
    if (d_max <= 4.0 * d_direct) {
        parallel_for(N, [&](std::size_t j) { out[j] = E(dist(j)); });
        return out;
    }
    // Far from the edge the response is smooth in log d: spline log|E| against log d.
    const double l0 = std::log(d_direct), l1 = std::log(d_max);
    const std::size_t ns = static_cast<std::size_t>(std::ceil(32.0 * (l1 - l0) / std::numbers::ln2)) + 1;
    const double step = (l1 - l0) / static_cast<double>(ns - 1);
    std::vector<double> samples(ns);
    parallel_for(ns, [&](std::size_t i) { samples[i] = E(std::exp(l0 + step * static_cast<double>(i))); });
    const double sign = samples[0] < 0 ? -1.0 : 1.0;
    std::vector<double> logs(ns);
    for (std::size_t i = 0; i < ns; ++i) logs[i] = std::log(std::max(std::abs(samples[i]), 1e-300));
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(logs.data(), ns, l0, step);
    std::vector<std::size_t> near;
    for (std::size_t j = 0; j < N; ++j) {
        const double d = dist(j);
        if (d < d_direct) {
            near.push_back(j);
        } else {
            const double lv = spline(std::min(std::log(d), l1));
            out[j] = lv < -690.0 ? 0.0 : sign * std::exp(lv);
        }
    }
    parallel_for(near.size(), [&](std::size_t i) { out[near[i]] = E(dist(near[i])); });
    return out;
}

// Spectrum (length M/2+1, real) of h * sum_{m != 0} k(z + mP) sampled on the padded
// lattice, P = M h. `far_coeff` is the coefficient c of the far field k ~ c|z|^(-1-beta),
// used for the images beyond the explicitly summed ones.
template <class K>
std::vector<double> image_spectrum(RealFFT& fft, double h, const K& kern, double far_coeff, double beta) {
    const std::size_t M = fft.size();
    const double P = static_cast<double>(M) * h;
    constexpr int kExplicit = 64;
    auto images = [&](double z) {
        double s = 0.0;
        for (int m = kExplicit; m >= 1; --m) s += kern(m * P + z) + kern(m * P - z);
        const double a = (kExplicit + 0.5) * P;
        s += far_coeff * (std::pow(a + z, -beta) + std::pow(a - z, -beta)) / (beta * P);
        return s;
    };
    // Smooth on the period scale: a cubic spline on 1025 nodes resolves it.
    constexpr std::size_t ns = 1025;
    const double z0 = -0.5 * P, dz = P / static_cast<double>(ns - 1);
    std::vector<double> vals(ns);
    parallel_for(ns, [&](std::size_t i) { vals[i] = images(z0 + dz * static_cast<double>(i)); });
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(vals.data(), ns, z0, dz);
    double* buf = fft.real();
    for (std::size_t j = 0; j < M; ++j) {
        const double z = j < M / 2 ? static_cast<double>(j) * h : (static_cast<double>(j) - static_cast<double>(M)) * h;
        buf[j] = h * spline(z);
    }
    fft.forward();
    std::vector<double> out(fft.spectrum_size());
    const auto* spec = fft.spectrum();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = spec[k].real();
    return out;
}

}  // namespace detail

// Fractional Laplacian constant: (-Delta)^a u(x) = C p.v. int (u(x) - u(y)) |x-y|^(-1-2a) dy, n = 1.
inline double frac_laplacian_constant(double alpha) {
    if (alpha >= 1.0) return 0.0;
    return std::pow(4.0, alpha) * std::tgamma(0.5 + alpha) / (std::sqrt(std::numbers::pi) * std::abs(std::tgamma(-alpha)));
}

// Exterior integral of one tail model against the kernel:
// int_{|y| > B, y on the tail's side} p(t, x - y) tail(y) dy, with B = distance of the
// box edge from the origin. Power-law tails use the substitution y = B / s.
inline double tail_convolution(const Kernel& k, const TailModel& tail, bool left, double t, double x, double B) {
    if (!(t > 0.0)) throw DomainError("tail_convolution needs t > 0");
    if (left) x = -x;  // mirror so the tail sits on the right
    const double d = B - x;
    if (tail.is_constant()) return tail.level == 0.0 ? 0.0 : tail.level * k.survival(t, d);
    if (tail.amplitude == 0.0) return 0.0;
    const double e = tail.exponent;
    auto f = [&](double s) {
        if (s <= 0.0) return 0.0;
        const double y = B / s;
        return k.density(t, y - x) * std::pow(y, -e) * B / (s * s);
    };
    const double w = std::pow(t, 1.0 / k.beta());
    std::vector<double> pts{0.0};
    for (double m = 1e6; m >= 0.25; m /= 4.0) {
        const double y = B + (std::max(d, 0.0) + w) * m;
        pts.push_back(B / y);
    }
    pts.push_back(1.0);
    quad::Tolerance tol;
    tol.abs = 1e-300;
    tol.rel = 1e-10;
    tol.rel_l1 = 1e-14;
    auto r = quad::integrate_pts(f, pts, tol);
    quad::require(r, "tail_convolution");
    return tail.amplitude * r.value;
}

class SpectralFlow {
public:
    static constexpr double kTau = 1.0;  // width parameter of the background step

    SpectralFlow(const GridSpec& grid, const KernelSpec& spec) : grid_(grid), kernel_(spec), fft_(2 * grid.num_points) {
        grid_.validate();
        if (spec.n != 1) throw DomainError("gridded flows are one-dimensional");
        const double y_star = kernel_.quantile_distance(1.0, 0.005);
        max_safe_t_ = std::pow(0.1 * grid_.half_width / y_star, kernel_.beta());
    }

    const GridSpec& grid() const { return grid_; }
    const Kernel& kernel() const { return kernel_; }
    double alpha() const { return kernel_.alpha(); }
    // Largest t for which the kernel mass beyond the 10% buffer stays below 1%.
    double max_safe_time() const { return max_safe_t_; }

    Field apply(const Field& u, double t) {
        check_field(u);
        if (!(t > 0.0)) throw DomainError("semigroup time must be positive");
        if (t > max_safe_t_)
            throw BufferOverrun("kernel mass beyond the buffer exceeds 1%; largest safe t is " + format_double(max_safe_t_),
                                max_safe_t_);
        Propagator& pr = propagator(t);
        const std::size_t N = grid_.num_points;
        const double cL = u.left.far_level(), cR = u.right.far_level(), jump = cR - cL;
        const std::vector<double>* P0 = jump != 0.0 ? &background_cdf() : nullptr;

        double* buf = fft_.real();
        for (std::size_t j = 0; j < N; ++j) buf[j] = u.values[j] - cL - (P0 ? jump * (*P0)[j] : 0.0);
        for (std::size_t j = N; j < 2 * N; ++j) buf[j] = 0.0;
        fft_.forward();
        auto* spec = fft_.spectrum();
        const double norm = 1.0 / static_cast<double>(2 * N);
        for (std::size_t k = 0; k < fft_.spectrum_size(); ++k) spec[k] *= pr.multiplier[k] * norm;
        fft_.backward();

        Field out(grid_, u.left, u.right, u.time + t);
        for (std::size_t j = 0; j < N; ++j) out.values[j] = buf[j] + cL;
        if (jump != 0.0) {
            const auto& Pt = background_image(pr);
            for (std::size_t j = 0; j < N; ++j) out.values[j] += jump * Pt[j];
        }
        add_exterior(out.values, u, jump, [&](bool left, Shape sh, double e) -> const std::vector<double>& {
            return flow_response(pr, left, sh, e);
        });
        refit_power_tails(out);
        return out;
    }

    // (-Delta)^alpha u on the grid. The output carries Constant(0) tails.
    Field frac_laplacian(const Field& u) {
        check_field(u);
        const std::size_t N = grid_.num_points;
        const double cL = u.left.far_level(), cR = u.right.far_level(), jump = cR - cL;
        const std::vector<double>* P0 = jump != 0.0 ? &background_cdf() : nullptr;
        const auto& mult = laplacian_multiplier();

        double* buf = fft_.real();
        for (std::size_t j = 0; j < N; ++j) buf[j] = u.values[j] - cL - (P0 ? jump * (*P0)[j] : 0.0);
        for (std::size_t j = N; j < 2 * N; ++j) buf[j] = 0.0;
        fft_.forward();
        auto* spec = fft_.spectrum();
        const double norm = 1.0 / static_cast<double>(2 * N);
        for (std::size_t k = 0; k < fft_.spectrum_size(); ++k) spec[k] *= mult[k] * norm;
        fft_.backward();

        Field out(grid_, TailModel::constant(0.0), TailModel::constant(0.0), u.time);
        for (std::size_t j = 0; j < N; ++j) out.values[j] = buf[j];
        if (jump != 0.0) {
            // (-Delta)^a P(tau, .) = -d/dtau P(tau, x) = x p(tau, x) / (beta tau)
            const double b = kernel_.beta();
            for (std::size_t j = 0; j < N; ++j) {
                const double x = grid_.node(j);
                out.values[j] += jump * x * kernel_.density(kTau, x) / (b * kTau);
            }
        }
        if (kernel_.alpha() < 1.0) {
            add_exterior(out.values, u, jump, [&](bool left, Shape sh, double e) -> const std::vector<double>& {
                return laplacian_response(left, sh, e);
            });
        }
        return out;
    }

private:
    enum class Shape { Power, Survival };
    using ResponseKey = std::tuple<bool, int, double>;

    struct Propagator {
        std::vector<double> multiplier;
        std::vector<double> background;  // P(tau + t, x_j)
        std::map<ResponseKey, std::vector<double>> responses;
        double t = 0.0;
    };

    void check_field(const Field& u) const {
        if (!(u.grid == grid_) || u.values.size() != grid_.num_points)
            throw DomainError("field grid does not match the flow's grid");
    }

    // Residual exterior contributions, linear in the tail parameters:
    // right: a_R y^-e + jump Surv(tau, y);  left: a_L |y|^-e - jump Surv(tau, |y|).
    template <class R>
    void add_exterior(std::vector<double>& v, const Field& u, double jump, R&& response) {
        const std::size_t N = v.size();
        auto add = [&](const std::vector<double>& r, double c) {
            if (c == 0.0) return;
            for (std::size_t j = 0; j < N; ++j) v[j] += c * r[j];
        };
        if (!u.right.is_constant() && u.right.amplitude != 0.0)
            add(response(false, Shape::Power, u.right.exponent), u.right.amplitude);
        if (!u.left.is_constant() && u.left.amplitude != 0.0)
            add(response(true, Shape::Power, u.left.exponent), u.left.amplitude);
        if (jump != 0.0) {
            add(response(false, Shape::Survival, 0.0), jump);
            add(response(true, Shape::Survival, 0.0), -jump);
        }
    }

    std::vector<double> frequencies_pow(double power) const {
        const std::size_t M = fft_.size();
        const double dxi = 2.0 * std::numbers::pi / (static_cast<double>(M) * grid_.spacing());
        std::vector<double> out(M / 2 + 1);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::pow(dxi * static_cast<double>(k), power);
        return out;
    }

    Propagator& propagator(double t) {
        auto it = cache_.find(t);
        if (it != cache_.end()) return *it->second;
        if (cache_.size() >= 96) cache_.clear();
        auto pr = std::make_unique<Propagator>();
        pr->t = t;
        const double b = kernel_.beta();
        auto xi_b = frequencies_pow(b);
        pr->multiplier.resize(xi_b.size());
        for (std::size_t k = 0; k < xi_b.size(); ++k) pr->multiplier[k] = std::exp(-t * xi_b[k]);
        if (!kernel_.gaussian()) {
            const Kernel& kk = kernel_;
            auto corr = detail::image_spectrum(
                fft_, grid_.spacing(), [&](double z) { return kk.density(t, z); }, kk.tail_constant() * t, b);
            for (std::size_t k = 0; k < corr.size(); ++k) pr->multiplier[k] -= corr[k];
        }
        auto& ref = *pr;
        cache_.emplace(t, std::move(pr));
        return ref;
    }

    const std::vector<double>& background_cdf() {
        if (bg_cdf_.empty()) {
            bg_cdf_.resize(grid_.num_points);
            parallel_for(grid_.num_points, [&](std::size_t j) { bg_cdf_[j] = kernel_.cdf(kTau, grid_.node(j)); });
        }
        return bg_cdf_;
    }

    const std::vector<double>& background_image(Propagator& pr) {
        if (pr.background.empty()) {
            pr.background.resize(grid_.num_points);
            const double ts = kTau + pr.t;
            parallel_for(grid_.num_points, [&](std::size_t j) { pr.background[j] = kernel_.cdf(ts, grid_.node(j)); });
        }
        return pr.background;
    }

    // Decay exponent (minus one) of kernel(d + w) * shape(B + w) in w.
    double response_kappa(Shape sh, double e) const {
        const double b = kernel_.beta();
        return kernel_.gaussian() ? 2.0 : b + (sh == Shape::Power ? e : b);
    }

    template <class K>
    std::vector<double> build_response(bool left, Shape sh, double e, const K& kern, double scale) {
        const Kernel& kk = kernel_;
        if (sh == Shape::Power) {
            return detail::exterior_response(
                grid_, left, kern, [e](double y) { return std::pow(y, -e); }, scale, response_kappa(sh, e));
        }
        return detail::exterior_response(
            grid_, left, kern, [&kk](double y) { return kk.survival(kTau, y); }, scale, response_kappa(sh, e));
    }

    const std::vector<double>& flow_response(Propagator& pr, bool left, Shape sh, double e) {
        ResponseKey key{left, static_cast<int>(sh), e};
        auto it = pr.responses.find(key);
        if (it != pr.responses.end()) return it->second;
        const Kernel& kk = kernel_;
        const double t = pr.t;
        auto v = build_response(left, sh, e, [&kk, t](double z) { return kk.density(t, z); },
                                std::pow(t, 1.0 / kk.beta()));
        return pr.responses.emplace(key, std::move(v)).first->second;
    }

    const std::vector<double>& laplacian_multiplier() {
        if (lap_mult_.empty()) {
            const double b = kernel_.beta();
            lap_mult_ = frequencies_pow(b);
            if (!kernel_.gaussian()) {
                const double C = frac_laplacian_constant(kernel_.alpha());
                auto corr = detail::image_spectrum(
                    fft_, grid_.spacing(), [C, b](double z) { return -C * std::pow(std::abs(z), -1.0 - b); }, -C, b);
                for (std::size_t k = 0; k < corr.size(); ++k) lap_mult_[k] -= corr[k];
            }
        }
        return lap_mult_;
    }

    const std::vector<double>& laplacian_response(bool left, Shape sh, double e) {
        ResponseKey key{left, static_cast<int>(sh), e};
        auto it = lap_responses_.find(key);
        if (it != lap_responses_.end()) return it->second;
        const double C = frac_laplacian_constant(kernel_.alpha());
        const double b = kernel_.beta();
        auto v = build_response(left, sh, e, [C, b](double z) { return -C * std::pow(z, -1.0 - b); }, 0.0);
        return lap_responses_.emplace(key, std::move(v)).first->second;
    }

    GridSpec grid_;
    Kernel kernel_;
    RealFFT fft_;
    double max_safe_t_ = 0.0;
    std::map<double, std::unique_ptr<Propagator>> cache_;
    std::vector<double> bg_cdf_;
    std::vector<double> lap_mult_;
    std::map<ResponseKey, std::vector<double>> lap_responses_;
};

inline Field apply_semigroup_spectral(const Field& u, double t, double alpha) {
    SpectralFlow flow(u.grid, KernelSpec::for_alpha(alpha));
    return flow.apply(u, t);
}

// Reference backend: midpoint-rule convolution over grid cells, truncated where the
// omitted kernel mass drops below 1e-8, plus exact exterior tail integrals.
inline Field apply_semigroup_quadrature(const Field& u, double t, const Kernel& k) {
    if (!(t > 0.0)) throw DomainError("semigroup time must be positive");
    const GridSpec& g = u.grid;
    const std::size_t N = g.num_points;
    const double h = g.spacing();
    const double cutoff = k.quantile_distance(t, 0.5e-8);
    const std::size_t M = std::min<std::size_t>(N, static_cast<std::size_t>(std::ceil(cutoff / h)) + 1);
    std::vector<double> kern(M + 1);
    for (std::size_t m = 0; m <= M; ++m) kern[m] = h * k.density(t, static_cast<double>(m) * h);
    Field out(g, u.left, u.right, u.time + t);
    const double Bl = -g.box_lo(), Br = g.box_hi();
    parallel_for(N, [&](std::size_t i) {
        const std::size_t lo = i > M ? i - M : 0, hi = std::min(N - 1, i + M);
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += kern[i > j ? i - j : j - i] * u.values[j];
        const double x = g.node(i);
        s += tail_convolution(k, u.left, true, t, x, Bl) + tail_convolution(k, u.right, false, t, x, Br);
        out.values[i] = s;
    });
    refit_power_tails(out);
    return out;
}

inline Field apply_semigroup_quadrature(const Field& u, double t, double alpha) {
    return apply_semigroup_quadrature(u, t, Kernel(KernelSpec::for_alpha(alpha)));
}


// ---------------------------------------------------------------------------
// Pointwise bounds on explicit data

struct BoundProbe {
    double t = 0.0;
    double x = 0.0;
    double value = 0.0;  // T_t datum (x)
    double ratio = 0.0;  // value / comparison function
};

struct BoundReport {
    double C_meas = 0.0;     // max upper ratio
    double c_meas = 0.0;     // min lower ratio
    std::vector<BoundProbe> upper;
    std::vector<BoundProbe> lower;
};

namespace detail {

// int p(t, x - y) v(y) dy for a datum v that is smooth between `breaks` and decays
// (or grows) like |y|^(-e) far away; kappa = decay exponent of the integrand minus one.
template <class V>
double convolve_pointwise(const Kernel& k, double t, double x, const V& v, std::vector<double> breaks, double kappa) {
    const double w = std::pow(t, 1.0 / k.beta());
    for (double c : {-64.0, -16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0, 64.0}) breaks.push_back(x + c * w);
    std::sort(breaks.begin(), breaks.end());
    const double Y = 4.0 * std::max(std::abs(breaks.front()), std::abs(breaks.back())) + w;
    std::vector<double> pts{-Y};
    for (double b : breaks)
        if (b > -Y && b < Y) pts.push_back(b);
    pts.push_back(Y);
    auto f = [&](double y) { return k.density(t, x - y) * v(y); };
    quad::Tolerance tol;
    tol.abs = 1e-300;
    tol.rel = 1e-11;
    tol.rel_l1 = 1e-13;
    tol.max_intervals = 8000;
    auto core = quad::integrate_pts(f, pts, tol);
    quad::require(core, "pointwise convolution");
    auto right = quad::integrate_power_tail(f, Y, kappa, tol);
    auto left = quad::integrate_power_tail([&](double z) { return f(-z); }, Y, kappa, tol);
    quad::require(right, "pointwise convolution tail");
    quad::require(left, "pointwise convolution tail");
    return core.value + right.value + left.value;
}

inline void finish(BoundReport& r) {
    r.C_meas = 0.0;
    r.c_meas = r.lower.empty() ? 0.0 : HUGE_VAL;
    for (const auto& p : r.upper) r.C_meas = std::max(r.C_meas, p.ratio);
    for (const auto& p : r.lower) r.c_meas = std::min(r.c_meas, p.ratio);
}

}  // namespace detail

// Truncated power datum v0 = a0 min(r0, |x|)^(-1-2a) against
// upper  C (1 + r0^(-2a) t) a0 |x|^(-1-2a)            (all probes)
// lower  c t / (t^(1/2a+1) + 1) a0 |x|^(-1-2a)        (probes with |x| >= r0).
inline BoundReport check_hr_bounds(double alpha, int n, double a0, double r0, const std::vector<double>& t_probes,
                                   const std::vector<double>& x_probes) {
    if (n != 1) throw DomainError("bound checks are one-dimensional");
    if (!(r0 >= 1.0) || !(a0 > 0.0)) throw DomainError("check_hr_bounds needs a0 > 0 and r0 >= 1");
    const Kernel k(KernelSpec::for_alpha(alpha));
    const double b = k.beta(), e = 1.0 + b;
    auto v0 = [&](double y) { return a0 * std::pow(std::max(r0, std::abs(y)), -e); };
    BoundReport rep;
    for (double t : t_probes) {
        if (!(t > 0.0)) throw DomainError("probe times must be positive");
        for (double x : x_probes) {
            const double T = detail::convolve_pointwise(k, t, x, v0, {-r0, r0}, k.gaussian() ? 2.0 : b + e);
            const double base = a0 * std::pow(std::abs(x), -e);
            rep.upper.push_back({t, x, T, T / ((1.0 + std::pow(r0, -b) * t) * base)});
            if (std::abs(x) >= r0) rep.lower.push_back({t, x, T, T / (t / (std::pow(t, 1.0 / b + 1.0) + 1.0) * base)});
        }
    }
    detail::finish(rep);
    return rep;
}

// Nondecreasing datum V0 = a0 |x|^(-2a) for x <= x0, a0 |x0|^(-2a) beyond; upper bound
// probed at x < 2 x0, lower bound at x < x0.
inline BoundReport check_hi_bounds(double alpha, double a0, double x0, const std::vector<double>& t_probes,
                                   const std::vector<double>& x_probes) {
    if (!(x0 <= -1.0) || !(a0 > 0.0)) throw DomainError("check_hi_bounds needs a0 > 0 and x0 <= -1");
    const Kernel k(KernelSpec::for_alpha(alpha));
    const double b = k.beta();
    const double top = a0 * std::pow(-x0, -b);
    // constant part handled exactly through the distribution function
    auto v_left = [&](double y) { return y <= x0 ? a0 * std::pow(-y, -b) - top : 0.0; };
    BoundReport rep;
    for (double t : t_probes) {
        if (!(t > 0.0)) throw DomainError("probe times must be positive");
        for (double x : x_probes) {
            const double T = top + detail::convolve_pointwise(k, t, x, v_left, {x0}, k.gaussian() ? 2.0 : b);
            const double base = a0 * std::pow(std::abs(x), -b);
            if (x < 2.0 * x0) rep.upper.push_back({t, x, T, T / ((1.0 + std::pow(-x0, -b) * t) * base)});
            if (x < x0) rep.lower.push_back({t, x, T, T / (t / (std::pow(t, 1.0 / b + 1.0) + 1.0) * base)});
        }
    }
    detail::finish(rep);
    return rep;
}

// E|Z|^g for Z with characteristic function exp(-|xi|^beta), 0 < g < beta.
inline double stable_abs_moment(double beta, double gamma) {
    if (beta >= 2.0) return std::pow(2.0, gamma) * std::tgamma(0.5 * (1.0 + gamma)) / std::sqrt(std::numbers::pi);
    return std::tgamma(1.0 - gamma / beta) / (std::tgamma(1.0 - gamma) * std::cos(0.5 * std::numbers::pi * gamma));
}

// w_g(x) = |x|^g against upper C_g (|x|^g + t^(g/2a)) and lower c_g |x|^g for |x| >= t^(1/2a).
inline BoundReport check_w_gamma_bounds(double alpha, double gamma, const std::vector<double>& t_probes,
                                        const std::vector<double>& x_probes) {
    const Kernel k(KernelSpec::for_alpha(alpha));
    const double b = k.beta();
    if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
    if (!(gamma < b) && !k.gaussian()) throw DomainError("gamma must be below 2 alpha: |x|^gamma is not integrable against the kernel tail");
    auto w = [gamma](double y) { return std::pow(std::abs(y), gamma); };
    BoundReport rep;
    for (double t : t_probes) {
        if (!(t > 0.0)) throw DomainError("probe times must be positive");
        for (double x : x_probes) {
            const double T = detail::convolve_pointwise(k, t, x, w, {0.0}, k.gaussian() ? 2.0 : b - gamma);
            rep.upper.push_back({t, x, T, T / (std::pow(std::abs(x), gamma) + std::pow(t, gamma / b))});
            if (std::abs(x) >= std::pow(t, 1.0 / b) && x != 0.0)
                rep.lower.push_back({t, x, T, T / std::pow(std::abs(x), gamma)});
        }
    }
    detail::finish(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Canonical data: int_1^2 p(s, .) ds and int_1^2 P(s, .) ds

inline Field canonical_decaying_datum(double alpha, int n, const GridSpec& grid) {
    if (n != 1) throw DomainError("gridded fields are one-dimensional");
    grid.validate();
    const Kernel k(KernelSpec::for_alpha(alpha));
    std::vector<double> s, w;
    quad::gauss_legendre_nodes<8>(1.0, 2.0, s, w);
    const double e = 1.0 + k.beta();
    Field f(grid, TailModel::power_law(0.0, e), TailModel::power_law(0.0, e));
    parallel_for(grid.num_points, [&](std::size_t j) {
        double v = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) v += w[i] * k.density(s[i], grid.node(j));
        f.values[j] = v;
    });
    refit_power_tails(f);
    return f;
}

inline Field canonical_monotone_datum(double alpha, const GridSpec& grid) {
    grid.validate();
    const Kernel k(KernelSpec::for_alpha(alpha));
    std::vector<double> s, w;
    quad::gauss_legendre_nodes<8>(1.0, 2.0, s, w);
    Field f(grid, TailModel::power_law(0.0, k.beta()), TailModel::constant(1.0));
    parallel_for(grid.num_points, [&](std::size_t j) {
        double v = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) v += w[i] * k.cdf(s[i], grid.node(j));
        f.values[j] = v;
    });
    refit_power_tails(f);
    return f;
}

// ---------------------------------------------------------------------------

struct RadialMonotoneReport {
    bool precondition_ok = false;
    bool preserved = false;
    double worst_asymmetry = 0.0;
    double worst_increase = 0.0;  // largest u(|x| + h) - u(|x|) after the flow
    std::string message;
};

namespace detail {
// Mirror pairs around the centre node N/2, interior nodes only.
inline void radial_defects(const Field& f, double& asym, double& incr) {
    const std::size_t c = f.size() / 2;
    asym = 0.0;
    incr = -HUGE_VAL;
    for (std::size_t j = 1; j < c && f.grid.interior(c + j); ++j) {
        asym = std::max(asym, std::abs(f.values[c + j] - f.values[c - j]));
        incr = std::max(incr, f.values[c + j] - f.values[c + j - 1]);
        incr = std::max(incr, f.values[c - j] - f.values[c - j + 1]);
    }
}
}  // namespace detail

inline RadialMonotoneReport check_radial_monotone_preservation(SpectralFlow& flow, const Field& field, double t,
                                                               double slack = 1e-9) {
    RadialMonotoneReport rep;
    double asym = 0.0, incr = 0.0;
    detail::radial_defects(field, asym, incr);
    if (asym > slack || incr > slack) {
        rep.message = "input is not even and nonincreasing in |x|";
        return rep;
    }
    rep.precondition_ok = true;
    const Field out = flow.apply(field, t);
    detail::radial_defects(out, rep.worst_asymmetry, rep.worst_increase);
    rep.preserved = rep.worst_asymmetry <= slack && rep.worst_increase <= slack;
    if (!rep.preserved) rep.message = "flow output lost symmetry or radial monotonicity";
    return rep;
}

inline RadialMonotoneReport check_radial_monotone_preservation(const Field& field, double t, double alpha) {
    SpectralFlow flow(field.grid, KernelSpec::for_alpha(alpha));
    return check_radial_monotone_preservation(flow, field, t);
}

}  // namespace fkpp
