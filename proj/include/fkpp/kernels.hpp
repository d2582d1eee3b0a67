#pragma once

// Transition densities of the symmetric 2*alpha-stable semigroup, exp(-t|xi|^(2 alpha))
// in Fourier variables, together with their distribution functions and the
// structural checks (normalization, Chapman-Kolmogorov, two-sided comparability).

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fkpp/error.hpp"
#include "fkpp/quadrature.hpp"

namespace fkpp {

enum class KernelStrategy { CauchyClosedForm, GaussianClosedForm, FourierInversion };

inline const char* to_string(KernelStrategy s) {
    switch (s) {
        case KernelStrategy::CauchyClosedForm: return "cauchy";
        case KernelStrategy::GaussianClosedForm: return "gaussian";
        case KernelStrategy::FourierInversion: return "fourier";
    }
    return "?";
}

struct KernelSpec {
    int n = 1;
    double alpha = 0.5;
    KernelStrategy strategy = KernelStrategy::CauchyClosedForm;

    double beta() const { return 2.0 * alpha; }

    // Closed form when one exists, Fourier inversion otherwise.
    static KernelSpec for_alpha(double alpha, int n = 1) {
        KernelSpec s;
        s.n = n;
        s.alpha = alpha;
        if (alpha == 0.5) {
            s.strategy = KernelStrategy::CauchyClosedForm;
        } else if (alpha == 1.0) {
            s.strategy = KernelStrategy::GaussianClosedForm;
        } else {
            s.strategy = KernelStrategy::FourierInversion;
        }
        s.validate();
        return s;
    }

    void validate() const {
        if (n < 1) throw DomainError("kernel dimension must be positive");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
        if (strategy == KernelStrategy::CauchyClosedForm && alpha != 0.5)
            throw DomainError("Cauchy closed form requires alpha = 1/2");
        if (strategy == KernelStrategy::GaussianClosedForm && alpha != 1.0)
            throw DomainError("Gaussian closed form requires alpha = 1");
        if (strategy == KernelStrategy::FourierInversion && n != 1)
            throw DomainError("Fourier inversion is implemented for n = 1 only");
    }
};

inline double eval_cauchy_kernel(double t, double r, int n = 1) {
    if (!(t > 0.0)) throw DomainError("kernel time must be positive");
    const double bn = std::tgamma(0.5 * (n + 1)) * std::pow(std::numbers::pi, -0.5 * (n + 1));
    return bn * t / std::pow(t * t + r * r, 0.5 * (n + 1));
}

inline double eval_gaussian_kernel(double t, double r, int n = 1) {
    if (!(t > 0.0)) throw DomainError("kernel time must be positive");
    return std::pow(4.0 * std::numbers::pi * t, -0.5 * n) * std::exp(-r * r / (4.0 * t));
}

// q(t,x) = t / (t^(n/2a + 1) + |x|^(n + 2a))
inline double q_bound(double t, double x, double alpha, int n = 1) {
    if (!(t > 0.0)) throw DomainError("q_bound requires t > 0");
    return t / (std::pow(t, n / (2.0 * alpha) + 1.0) + std::pow(std::abs(x), n + 2.0 * alpha));
}

namespace detail {

// Standard one-dimensional law with characteristic function exp(-|xi|^beta), beta in (0, 2].
// Densities are evaluated by one of three routes:
//   small |y|: real-axis cosine transform on [0, Xi], exp(-Xi^beta) negligible;
//   moderate |y|: the same integral with the path rotated into the upper half plane,
//     where it is no longer oscillatory;
//   large |y|: the power series in |y|^(-beta) (convergent for beta < 1, asymptotic above).
class StableLaw {
public:
    explicit StableLaw(double beta) : beta_(beta) {
        if (!(beta > 0.0 && beta <= 2.0)) throw DomainError("stability exponent out of range");
        xi_max_ = std::pow(kCut, 1.0 / beta_);
        theta_ = beta_ < 1.0 ? 0.5 * std::numbers::pi : 0.8 * std::numbers::pi / (2.0 * beta_);
        series_ok_ = beta_ < 1.999;
        const double lpi = std::log(std::numbers::pi);
        for (int k = 1; k <= kTerms; ++k) {
            double s = std::sin(0.5 * std::numbers::pi * beta_ * k);
            if (std::abs(s) < 1e-15) s = 0.0;
            sfac_[k - 1] = (k % 2 == 1 ? 1.0 : -1.0) * s;
            ldens_[k - 1] = std::lgamma(beta_ * k + 1.0) - std::lgamma(k + 1.0) - lpi;
            lsurv_[k - 1] = std::lgamma(beta_ * k) - std::lgamma(k + 1.0) - lpi;
        }
        y_dens_ = series_threshold(true);
        y_surv_ = series_threshold(false);
    }

    double beta() const { return beta_; }

    // Leading far-field coefficient: density ~ c y^(-1-beta).
    double tail_constant() const {
        return series_ok_ ? sfac_[0] * std::exp(ldens_[0]) : 0.0;
    }

    double density(double y) const {
        y = std::abs(y);
        if (y >= y_dens_) {
            double v;
            if (series(y, true, v)) return v;
        }
        if (y * xi_max_ <= kRealAxisLimit) return density_real_axis(y);
        return density_ray(y);
    }

    // Mass to the right of y >= 0.
    double survival(double y) const {
        if (y < 0.0) return 1.0 - survival(-y);
        if (y == 0.0) return 0.5;
        if (y >= y_surv_) {
            double v;
            if (series(y, false, v)) return v;
        }
        if (y * xi_max_ <= kRealAxisLimit) return 0.5 - sine_integral_real_axis(y);
        return 0.5 - sine_integral_ray(y);
    }

    // Far-field series evaluation; returns false when it cannot reach full accuracy.
    bool series(double y, bool dens, double& out) const {
        if (!series_ok_ || !(y > 0.0)) return false;
        const double ly = std::log(y);
        const auto& lc = dens ? ldens_ : lsurv_;
        double sum = 0.0, maxabs = 0.0, prev = HUGE_VAL;
        for (int k = 1; k <= kTerms; ++k) {
            const double mag = std::exp(lc[k - 1] - (beta_ * k + (dens ? 1.0 : 0.0)) * ly);
            if (beta_ > 1.0 && k > 2 && mag > prev) return false;  // asymptotic series turned
            const double term = sfac_[k - 1] * mag;
            sum += term;
            maxabs = std::max(maxabs, std::abs(term));
            if (k > 1 && mag <= 1e-17 * std::abs(sum)) {
                if (maxabs > 1e3 * std::abs(sum)) return false;  // cancellation
                out = sum;
                return true;
            }
            prev = mag;
        }
        return false;
    }

private:
    static constexpr int kTerms = 160;
    static constexpr double kCut = 40.0;  // exp(-40) ~ 4e-18
    static constexpr double kRealAxisLimit = 50.0;

    double series_threshold(bool dens) const {
        if (!series_ok_) return HUGE_VAL;
        // Smallest y on a quarter-octave grid from which the series succeeds at
        // every grid point up to 2^40.
        double thr = HUGE_VAL;
        double v;
        for (int j = 160; j >= -8; --j) {
            double y = std::ldexp(1.0, 0) * std::pow(2.0, 0.25 * j);
            if (series(y, dens, v)) {
                thr = y;
            } else {
                break;
            }
        }
        return thr;
    }

    quad::Tolerance tol() const {
        quad::Tolerance t;
        t.abs = 1e-300;
        t.rel = 1e-13;
        t.rel_l1 = 1e-14;
        t.max_intervals = 6000;
        return t;
    }

    // (1/pi) int_0^Xi cos(xi y) exp(-xi^beta) dxi with xi = v^2.
    double density_real_axis(double y) const {
        const double b = beta_;
        auto f = [y, b](double v) {
            const double xi = v * v;
            return 2.0 * v * std::cos(xi * y) * std::exp(-std::pow(xi, b));
        };
        const double vmax = std::sqrt(xi_max_);
        auto r = quad::integrate_pts(f, {0.0, 0.25 * vmax, 0.5 * vmax, vmax}, tol());
        quad::require(r, "stable density (real axis)");
        return r.value / std::numbers::pi;
    }

    double sine_integral_real_axis(double y) const {
        const double b = beta_;
        auto f = [y, b](double v) {
            if (v == 0.0) return 0.0;
            const double xi = v * v;
            return 2.0 * std::sin(xi * y) / v * std::exp(-std::pow(xi, b));
        };
        const double vmax = std::sqrt(xi_max_);
        auto r = quad::integrate_pts(f, {0.0, 0.25 * vmax, 0.5 * vmax, vmax}, tol());
        quad::require(r, "stable cdf (real axis)");
        return r.value / std::numbers::pi;
    }

    std::vector<double> ray_points(double vmax, double vscale) const {
        std::vector<double> pts{0.0};
        for (double v = vscale / 16.0; v < vmax; v *= 2.0) pts.push_back(v);
        pts.push_back(vmax);
        return pts;
    }

    // Path xi = r e^{i theta}: Re[e^{i theta} exp(i r y e^{i theta} - r^beta e^{i beta theta})].
    double density_ray(double y) const {
        const double b = beta_, th = theta_;
        const double st = std::sin(th), ct = std::cos(th);
        const double sb = std::sin(b * th), cb = std::cos(b * th);
        auto f = [=](double v) {
            const double r = v * v;
            const double rb = std::pow(r, b);
            const double re = -r * y * st - rb * cb;
            const double im = r * y * ct - rb * sb;
            return 2.0 * v * std::exp(re) * std::cos(th + im);
        };
        const double rmax = std::min(kCut / (y * st), std::pow(kCut / cb, 1.0 / b));
        auto r = quad::integrate_pts(f, ray_points(std::sqrt(rmax), std::sqrt(1.0 / (y * st))), tol());
        quad::require(r, "stable density (rotated path)");
        return r.value / std::numbers::pi;
    }

    // (1/pi) Im int_0^inf (exp(i r y e^{i theta}) - 1) exp(-r^beta e^{i beta theta}) dr / r
    double sine_integral_ray(double y) const {
        const double b = beta_, th = theta_;
        const double st = std::sin(th), ct = std::cos(th);
        const double sb = std::sin(b * th), cb = std::cos(b * th);
        auto f = [=](double v) {
            if (v == 0.0) return 0.0;
            const double r = v * v;
            // expm1 of w = -r y st + i r y ct, kept accurate for small r
            const double wa = -r * y * st, wb = r * y * ct;
            const double sh = std::sin(0.5 * wb);
            const std::complex<double> em1(std::expm1(wa) * std::cos(wb) - 2.0 * sh * sh,
                                           std::exp(wa) * std::sin(wb));
            const double rb = std::pow(r, b);
            const std::complex<double> a = std::exp(std::complex<double>(-rb * cb, -rb * sb));
            return 2.0 * (em1 * a).imag() / v;
        };
        const double rmax = std::pow(kCut / cb, 1.0 / b);
        auto r = quad::integrate_pts(f, ray_points(std::sqrt(rmax), std::sqrt(1.0 / (y * st))), tol());
        quad::require(r, "stable cdf (rotated path)");
        return r.value / std::numbers::pi;
    }

    double beta_;
    double xi_max_;
    double theta_;
    bool series_ok_;
    std::array<double, kTerms> sfac_{};
    std::array<double, kTerms> ldens_{};
    std::array<double, kTerms> lsurv_{};
    double y_dens_ = HUGE_VAL;
    double y_surv_ = HUGE_VAL;
};

inline std::shared_ptr<const StableLaw> stable_law(double beta) {
    static std::mutex mu;
    static std::map<double, std::shared_ptr<const StableLaw>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(beta);
    if (it != cache.end()) return it->second;
    auto law = std::make_shared<const StableLaw>(beta);
    cache.emplace(beta, law);
    return law;
}

}  // namespace detail

// Evaluator bound to one KernelSpec; cheap to copy, safe to share across threads.
class Kernel {
public:
    explicit Kernel(const KernelSpec& spec) : spec_(spec) {
        spec_.validate();
        if (spec_.strategy == KernelStrategy::FourierInversion) law_ = detail::stable_law(spec_.beta());
    }

    const KernelSpec& spec() const { return spec_; }
    double alpha() const { return spec_.alpha; }
    double beta() const { return spec_.beta(); }
    bool gaussian() const { return spec_.strategy == KernelStrategy::GaussianClosedForm; }

    // p(t, x); for n >= 2 the argument is the radius |x|.
    double density(double t, double x) const {
        if (!(t > 0.0)) throw DomainError("kernel time must be positive");
        switch (spec_.strategy) {
            case KernelStrategy::CauchyClosedForm: return eval_cauchy_kernel(t, std::abs(x), spec_.n);
            case KernelStrategy::GaussianClosedForm: return eval_gaussian_kernel(t, std::abs(x), spec_.n);
            case KernelStrategy::FourierInversion: {
                const double s = std::pow(t, -1.0 / beta());
                return s * law_->density(s * std::abs(x));
            }
        }
        return 0.0;
    }

    // int_d^inf p(t, y) dy (n = 1)
    double survival(double t, double d) const {
        if (!(t > 0.0)) throw DomainError("kernel time must be positive");
        require_1d();
        switch (spec_.strategy) {
            case KernelStrategy::CauchyClosedForm: return std::atan2(t, d) / std::numbers::pi;
            case KernelStrategy::GaussianClosedForm: return 0.5 * std::erfc(d / (2.0 * std::sqrt(t)));
            case KernelStrategy::FourierInversion:
                return law_->survival(std::pow(t, -1.0 / beta()) * d);
        }
        return 0.0;
    }

    double cdf(double t, double x) const { return survival(t, -x); }

    // lim |x|^(n+2a) p(1, x); zero for the Gaussian.
    double tail_constant() const {
        switch (spec_.strategy) {
            case KernelStrategy::CauchyClosedForm:
                return std::tgamma(0.5 * (spec_.n + 1)) * std::pow(std::numbers::pi, -0.5 * (spec_.n + 1));
            case KernelStrategy::GaussianClosedForm: return 0.0;
            case KernelStrategy::FourierInversion: return law_->tail_constant();
        }
        return 0.0;
    }

    // Smallest |x| beyond which p(t, .) has mass below `mass` on each side.
    double quantile_distance(double t, double mass) const {
        double lo = 0.0, hi = std::pow(t, 1.0 / beta());
        while (survival(t, hi) > mass) {
            lo = hi;
            hi *= 2.0;
        }
        for (int i = 0; i < 100 && hi - lo > 1e-12 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (survival(t, mid) > mass ? lo : hi) = mid;
        }
        return hi;
    }

private:
    void require_1d() const {
        if (spec_.n != 1) throw DomainError("distribution functions are one-dimensional");
    }

    KernelSpec spec_;
    std::shared_ptr<const detail::StableLaw> law_;
};

inline double eval_stable_kernel(const KernelSpec& spec, double t, double x) {
    return Kernel(spec).density(t, x);
}

inline double stable_cdf(const KernelSpec& spec, double t, double x) {
    return Kernel(spec).cdf(t, x);
}

// ---------------------------------------------------------------------------
// Structural checks

struct ComparabilityReport {
    double measured_B = 0.0;
    std::vector<std::pair<double, double>> sample_grid;
    double max_upper_ratio = 0.0;
    double min_lower_ratio = 0.0;
    std::pair<double, double> argmax_upper{0, 0};
    std::pair<double, double> argmin_lower{0, 0};
};

// Log-spaced probes: t in [0.1, 10], |x| in {0} U [0.01, 100]. `refine` doubles the density.
inline std::vector<std::pair<double, double>> default_p3_probes(int refine = 1) {
    const int nt = 8 * refine + 1, nx = 16 * refine + 1;
    std::vector<std::pair<double, double>> probes;
    for (int i = 0; i < nt; ++i) {
        const double t = std::pow(10.0, -1.0 + 2.0 * i / (nt - 1));
        probes.emplace_back(t, 0.0);
        for (int j = 0; j < nx; ++j) probes.emplace_back(t, std::pow(10.0, -2.0 + 4.0 * j / (nx - 1)));
    }
    return probes;
}

inline ComparabilityReport verify_p3(const KernelSpec& spec, const std::vector<std::pair<double, double>>& probes) {
    if (probes.empty()) throw DomainError("verify_p3 needs at least one probe");
    Kernel k(spec);
    ComparabilityReport rep;
    rep.sample_grid = probes;
    rep.max_upper_ratio = 0.0;
    rep.min_lower_ratio = HUGE_VAL;
    for (const auto& [t, x] : probes) {
        if (!(t > 0.0)) throw DomainError("verify_p3 probes need t > 0");
        const double ratio = k.density(t, x) / q_bound(t, x, spec.alpha, spec.n);
        if (ratio > rep.max_upper_ratio) {
            rep.max_upper_ratio = ratio;
            rep.argmax_upper = {t, x};
        }
        if (ratio < rep.min_lower_ratio) {
            rep.min_lower_ratio = ratio;
            rep.argmin_lower = {t, x};
        }
    }
    rep.measured_B = std::max(rep.max_upper_ratio, 1.0 / rep.min_lower_ratio);
    return rep;
}

// |(p(t)*p(s))(x) - p(t+s, x)|, n = 1.
inline double chapman_kolmogorov_residual(const KernelSpec& spec, double s, double t, double x) {
    if (!(s > 0.0 && t > 0.0)) throw DomainError("Chapman-Kolmogorov check needs s, t > 0");
    if (spec.n != 1) throw DomainError("Chapman-Kolmogorov check is one-dimensional");
    Kernel k(spec);
    auto f = [&](double y) { return k.density(t, x - y) * k.density(s, y); };
    const double w = std::pow(std::max(s, t), 1.0 / spec.beta());
    const double Y = std::abs(x) + 50.0 * w;
    std::vector<double> pts{-Y};
    for (double c : {-8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0}) pts.push_back(c * w);
    for (double c : {-8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0}) pts.push_back(x + c * w);
    pts.push_back(Y);
    std::sort(pts.begin(), pts.end());
    quad::Tolerance tol;
    tol.abs = 1e-16;
    tol.rel = 1e-12;
    auto core = quad::integrate_pts(f, pts, tol);
    quad::require(core, "Chapman-Kolmogorov core");
    const double kappa = 1.0 + 2.0 * spec.beta();
    auto right = quad::integrate_power_tail(f, Y, kappa, tol);
    auto left = quad::integrate_power_tail([&](double z) { return f(-z); }, Y, kappa, tol);
    quad::require(right, "Chapman-Kolmogorov tail");
    quad::require(left, "Chapman-Kolmogorov tail");
    return std::abs(core.value + right.value + left.value - k.density(s + t, x));
}

// |int p(t,x) dx - 1|: quadrature on |x| <= X plus the analytic tail of the power-law
// asymptote fitted at X.
inline double normalization_defect(const KernelSpec& spec, double t) {
    Kernel k(spec);
    const double beta = spec.beta();
    const double w = std::pow(t, 1.0 / beta);
    const double X = k.gaussian() ? 60.0 * w : 1e8 * w;
    quad::Tolerance tol;
    tol.abs = 1e-16;
    tol.rel = 1e-13;
    double mass = 0.0;
    if (spec.n == 1) {
        auto r = quad::integrate_pts([&](double x) { return k.density(t, x); }, quad::graded_points(0.0, X, 0.05 * w), tol);
        quad::require(r, "normalization");
        const double c_fit = std::pow(X, 1.0 + beta) * k.density(t, X);
        mass = 2.0 * (r.value + c_fit * std::pow(X, -beta) / beta);
    } else {
        const int n = spec.n;
        const double area = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
        auto r = quad::integrate_pts([&](double r_) { return area * std::pow(r_, n - 1) * k.density(t, r_); },
                                     quad::graded_points(0.0, X, 0.05 * w), tol);
        quad::require(r, "normalization");
        const double c_fit = std::pow(X, n + beta) * k.density(t, X);
        mass = r.value + area * c_fit * std::pow(X, -beta) / beta;
    }
    return std::abs(mass - 1.0);
}

}  // namespace fkpp
