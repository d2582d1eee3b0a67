#pragma once

// Level-set tracking and exponential rate fits.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fkpp/error.hpp"
#include "fkpp/field.hpp"

namespace fkpp {

struct Crossings {
    std::optional<double> left;
    std::optional<double> right;
};

// Leftmost and rightmost sign changes of u - level among interior nodes, located
// by linear interpolation.
inline Crossings extract_level_sets(const Field& u, double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
    const GridSpec& g = u.grid;
    const double h = g.spacing();
    std::size_t lo = 0, hi = g.num_points - 1;
    while (lo < hi && !g.interior(lo)) ++lo;
    while (hi > lo && !g.interior(hi)) --hi;
    auto above = [&](std::size_t j) { return u.values[j] >= level; };
    auto cross = [&](std::size_t j) {
        const double a = u.values[j] - level, b = u.values[j + 1] - level;
        return a == 0.0 ? g.node(j) : g.node(j) + h * a / (a - b);
    };
    Crossings c;
    for (std::size_t j = lo; j < hi; ++j) {
        if (above(j) != above(j + 1)) {
            c.left = cross(j);
            break;
        }
    }
    for (std::size_t j = hi; j-- > lo;) {
        if (above(j) != above(j + 1)) {
            c.right = cross(j);
            break;
        }
    }
    return c;
}

enum class Side { Left, Right };

inline const char* to_string(Side s) { return s == Side::Left ? "left" : "right"; }

struct FrontSample {
    double t = 0.0;
    std::optional<double> x_left;
    std::optional<double> x_right;

    std::optional<double> on(Side s) const { return s == Side::Left ? x_left : x_right; }
};

struct FrontTrace {
    double level = 0.5;
    double spacing = 0.0;         // grid spacing h of the source fields
    double interior_limit = 0.0;  // |x| bound of the unbuffered region
    std::vector<FrontSample> samples;

    void record(const Field& u) {
        const auto c = extract_level_sets(u, level);
        spacing = u.grid.spacing();
        interior_limit = u.grid.interior_limit();
        samples.push_back({u.time, c.left, c.right});
    }
};

struct RateEstimate {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
    std::pair<double, double> window{0.0, 0.0};
    std::size_t sample_count = 0;
};

// Least-squares line through (t, log|x_side(t)|) over samples with t in the window.
inline RateEstimate fit_exponential_rate(const FrontTrace& trace, Side side, std::pair<double, double> window) {
    std::vector<double> ts, ys;
    for (const auto& s : trace.samples) {
        if (s.t < window.first || s.t > window.second) continue;
        const auto x = s.on(side);
        if (!x) continue;
        if (std::abs(*x) < 10.0 * trace.spacing || *x == 0.0) continue;  // unresolved by the grid
        ts.push_back(s.t);
        ys.push_back(std::log(std::abs(*x)));
    }
    if (ts.size() < 5) throw FitError("fewer than 5 resolved crossings in the fit window");
    const double n = static_cast<double>(ts.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        mt += ts[i];
        my += ys[i];
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - mt) * (ts[i] - mt);
        sty += (ts[i] - mt) * (ys[i] - my);
    }
    if (!(stt > 0.0)) throw FitError("fit window spans a single time");
    RateEstimate est;
    est.slope = sty / stt;
    est.intercept = my - est.slope * mt;
    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = ys[i] - est.intercept - est.slope * ts[i];
        ss += r * r;
    }
    est.rms_residual = std::sqrt(ss / n);
    est.window = {ts.front(), ts.back()};
    est.sample_count = ts.size();
    return est;
}

// Window policy: the last `tail_fraction` of the trace, optionally clipped to
// [t_min, t_max], keeping samples whose front is at least `min_cells` grid cells
// from the origin and from the buffer.
struct FitPolicy {
    double tail_fraction = 0.6;
    double min_cells = 50.0;
    std::optional<double> t_min;
    std::optional<double> t_max;
};

inline std::pair<double, double> policy_window(const FrontTrace& trace, Side side, const FitPolicy& policy = {}) {
    if (trace.samples.empty()) throw FitError("empty trace");
    const double t0 = trace.samples.front().t, t1 = trace.samples.back().t;
    double lo = t1 - policy.tail_fraction * (t1 - t0), hi = t1;
    if (policy.t_min) lo = std::max(lo, *policy.t_min);
    if (policy.t_max) hi = std::min(hi, *policy.t_max);
    const double margin = policy.min_cells * trace.spacing;
    double first = HUGE_VAL, last = -HUGE_VAL;
    for (const auto& s : trace.samples) {
        if (s.t < lo || s.t > hi) continue;
        const auto x = s.on(side);
        if (!x) continue;
        const double ax = std::abs(*x);
        if (ax < margin) continue;
        if (trace.interior_limit > 0.0 && ax > trace.interior_limit - margin) continue;  // 0: limit unknown
        first = std::min(first, s.t);
        last = std::max(last, s.t);
    }
    if (!(first <= last)) throw FitError("no samples satisfy the fit-window policy");
    return {first, last};
}

inline RateEstimate fit_exponential_rate(const FrontTrace& trace, Side side, const FitPolicy& policy = {}) {
    return fit_exponential_rate(trace, side, policy_window(trace, side, policy));
}

struct Verdict {
    bool pass = false;
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
};

inline Verdict theorem_verdict(const RateEstimate& est, double expected_sigma, double tol) {
    return {std::abs(est.slope - expected_sigma) <= tol, est.slope, expected_sigma, tol};
}

// Centred differences (x(t_{i+k}) - x(t_{i-k})) / (t_{i+k} - t_{i-k}).
inline std::vector<std::pair<double, double>> instantaneous_speed(const FrontTrace& trace, Side side,
                                                                  std::size_t stride = 1) {
    if (trace.samples.size() < 3) throw FitError("speed needs at least 3 samples");
    if (stride == 0) throw DomainError("stride must be positive");
    std::vector<std::pair<double, double>> out;
    const auto& s = trace.samples;
    for (std::size_t i = stride; i + stride < s.size(); ++i) {
        const auto a = s[i - stride].on(side), b = s[i + stride].on(side);
        if (!a || !b) continue;
        out.emplace_back(s[i].t, (*b - *a) / (s[i + stride].t - s[i - stride].t));
    }
    return out;
}

// Speed at the sample nearest to t.
inline double speed_at(const std::vector<std::pair<double, double>>& speeds, double t) {
    if (speeds.empty()) throw FitError("no speed samples");
    auto best = speeds.begin();
    for (auto it = speeds.begin(); it != speeds.end(); ++it)
        if (std::abs(it->first - t) < std::abs(best->first - t)) best = it;
    return best->second;
}

struct PrefactorPoint {
    double t = 0.0;
    double plain = 0.0;       // |x| e^{-sigma t}
    double normalized = 0.0;  // |x| e^{-sigma t} t^{-1/(n+2a)}
};

inline std::vector<PrefactorPoint> heuristic_prefactor_diagnostic(const FrontTrace& trace, double sigma_star,
                                                                  double alpha, Side side = Side::Right, int n = 1) {
    std::vector<PrefactorPoint> out;
    for (const auto& s : trace.samples) {
        const auto x = s.on(side);
        if (!x || !(s.t > 0.0)) continue;
        const double plain = std::abs(*x) * std::exp(-sigma_star * s.t);
        out.push_back({s.t, plain, plain * std::pow(s.t, -1.0 / (n + 2.0 * alpha))});
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV: optional "# key=value" lines (level, h, interior_limit), then the header
// t,x_left,x_right and one row per sample, empty cells for absent crossings.

inline void write_trace_csv(std::ostream& os, const FrontTrace& tr) {
    os << "# level=" << format_double(tr.level) << "\n# h=" << format_double(tr.spacing)
       << "\n# interior_limit=" << format_double(tr.interior_limit) << "\nt,x_left,x_right\n";
    for (const auto& s : tr.samples) {
        os << format_double(s.t) << ',';
        if (s.x_left) os << format_double(*s.x_left);
        os << ',';
        if (s.x_right) os << format_double(*s.x_right);
        os << '\n';
    }
}

inline void write_trace_csv(const std::string& path, const FrontTrace& tr) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    write_trace_csv(os, tr);
}

inline FrontTrace read_trace_csv(std::istream& is, double level = 0.5) {
    FrontTrace tr;
    tr.level = level;
    bool header = false;
    std::string line;
    std::size_t lineno = 0;
    auto num = [&](const std::string& cell) -> std::optional<double> {
        if (cell.empty()) return std::nullopt;
        try {
            std::size_t pos = 0;
            const double v = std::stod(cell, &pos);
            if (pos != cell.size()) throw std::invalid_argument(cell);
            return v;
        } catch (const std::exception&) {
            throw ParseError("bad number '" + cell + "'", lineno);
        }
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header) {
            if (line.rfind("# ", 0) == 0) {
                const auto eq = line.find('=');
                if (eq == std::string::npos) throw ParseError("expected '# key=value'", lineno);
                const std::string key = line.substr(2, eq - 2);
                const auto v = num(line.substr(eq + 1));
                if (!v) throw ParseError("missing value for " + key, lineno);
                if (key == "level") tr.level = *v;
                else if (key == "h") tr.spacing = *v;
                else if (key == "interior_limit") tr.interior_limit = *v;
                else throw ParseError("unknown key " + key, lineno);
                continue;
            }
            if (line != "t,x_left,x_right") throw ParseError("expected header t,x_left,x_right", lineno);
            header = true;
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (cells.size() != 3) throw ParseError("expected 3 columns", lineno);
        const auto t = num(cells[0]);
        if (!t) throw ParseError("missing time", lineno);
        tr.samples.push_back({*t, num(cells[1]), num(cells[2])});
    }
    if (!header) throw ParseError("missing header t,x_left,x_right", lineno);
    return tr;
}

inline FrontTrace read_trace_csv(const std::string& path, double level = 0.5) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    return read_trace_csv(is, level);
}

}  // namespace fkpp
