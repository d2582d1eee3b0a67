#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fkpp/error.hpp"

namespace fkpp {

// Uniform grid x_j = -L + j h, j = 0..N-1, h = 2L/N. Node j owns the cell
// [x_j - h/2, x_j + h/2], so the sampled box is [-L - h/2, L - h/2].
struct GridSpec {
    double half_width = 1.0;
    std::size_t num_points = 2;

    double spacing() const { return 2.0 * half_width / static_cast<double>(num_points); }
    double node(std::size_t j) const { return -half_width + static_cast<double>(j) * spacing(); }
    double box_lo() const { return -half_width - 0.5 * spacing(); }
    double box_hi() const { return half_width - 0.5 * spacing(); }
    // Outer 10% on each side is a buffer excluded from accuracy contracts.
    double interior_limit() const { return 0.9 * half_width; }
    bool interior(std::size_t j) const { return std::abs(node(j)) <= interior_limit(); }
    // Index of the node nearest to x (clamped).
    std::size_t index_of(double x) const {
        double j = std::round((x + half_width) / spacing());
        j = std::clamp(j, 0.0, static_cast<double>(num_points - 1));
        return static_cast<std::size_t>(j);
    }

    void validate() const {
        if (!(half_width > 0.0)) throw DomainError("grid half width must be positive");
        if (num_points < 4 || num_points % 2 != 0) throw DomainError("grid size must be even and at least 4");
    }

    bool operator==(const GridSpec& o) const { return half_width == o.half_width && num_points == o.num_points; }
};

// Far-field model beyond the box: a|x|^-beta or a constant level.
struct TailModel {
    enum class Kind { PowerLaw, Constant };
    Kind kind = Kind::Constant;
    double amplitude = 0.0;  // PowerLaw
    double exponent = 1.0;   // PowerLaw
    double level = 0.0;      // Constant

    static TailModel constant(double c) {
        TailModel t;
        t.kind = Kind::Constant;
        t.level = c;
        return t;
    }
    static TailModel power_law(double a, double beta) {
        if (!(beta > 0.0)) throw DomainError("power-law tail exponent must be positive");
        TailModel t;
        t.kind = Kind::PowerLaw;
        t.amplitude = a;
        t.exponent = beta;
        return t;
    }

    bool is_constant() const { return kind == Kind::Constant; }
    // Level the tail approaches far away.
    double far_level() const { return is_constant() ? level : 0.0; }
    double value(double x) const {
        return is_constant() ? level : amplitude * std::pow(std::abs(x), -exponent);
    }
    bool operator==(const TailModel& o) const {
        return kind == o.kind && (is_constant() ? level == o.level : amplitude == o.amplitude && exponent == o.exponent);
    }
};

struct Field {
    GridSpec grid;
    std::vector<double> values;
    TailModel left;
    TailModel right;
    double time = 0.0;

    Field() = default;
    Field(const GridSpec& g, TailModel l, TailModel r, double t = 0.0)
        : grid(g), values(g.num_points, 0.0), left(l), right(r), time(t) {}

    std::size_t size() const { return values.size(); }
    double x(std::size_t j) const { return grid.node(j); }

    // Sample u at x: grid values inside the box, tail models outside.
    double sample(double x) const {
        if (x < grid.box_lo()) return left.value(x);
        if (x >= grid.box_hi()) return right.value(x);
        const double h = grid.spacing();
        const double s = (x + grid.half_width) / h;
        const auto j = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, static_cast<double>(size() - 2)));
        const double w = s - static_cast<double>(j);
        return (1.0 - w) * values[j] + w * values[j + 1];
    }
};

// Grid values of a function, with the given tails.
template <class F>
Field sample_field(const GridSpec& g, F&& u, TailModel left, TailModel right, double t = 0.0) {
    g.validate();
    Field f(g, left, right, t);
    for (std::size_t j = 0; j < g.num_points; ++j) f.values[j] = u(g.node(j));
    return f;
}

// Least-squares amplitude of a|x|^-beta over nodes with lo <= |x| <= hi on one side.
inline double fit_power_amplitude(const Field& f, bool left_side, double beta, double lo, double hi) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double x = f.x(j);
        if ((left_side && x >= 0) || (!left_side && x <= 0)) continue;
        const double ax = std::abs(x);
        if (ax < lo || ax > hi) continue;
        const double w = std::pow(ax, -beta);
        num += f.values[j] * w;
        den += w * w;
    }
    return den > 0 ? std::max(0.0, num / den) : 0.0;
}

// PowerLaw amplitudes are refit on the outermost 5% of interior nodes, the band
// |x| in [0.85 L, 0.9 L] that ends at the buffer edge.
inline void refit_power_tails(Field& f) {
    const double L = f.grid.half_width;
    if (!f.left.is_constant())
        f.left.amplitude = fit_power_amplitude(f, true, f.left.exponent, 0.85 * L, 0.9 * L);
    if (!f.right.is_constant())
        f.right.amplitude = fit_power_amplitude(f, false, f.right.exponent, 0.85 * L, 0.9 * L);
}

// ---------------------------------------------------------------------------
// Snapshot text format

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_tail(const TailModel& t) {
    if (t.is_constant()) return "constant," + format_double(t.level);
    return "power_law," + format_double(t.amplitude) + "," + format_double(t.exponent);
}

inline TailModel parse_tail(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    try {
        if (parts.size() == 2 && parts[0] == "constant") return TailModel::constant(std::stod(parts[1]));
        if (parts.size() == 3 && parts[0] == "power_law")
            return TailModel::power_law(std::stod(parts[1]), std::stod(parts[2]));
    } catch (const std::logic_error&) {
    }
    throw ParseError("bad tail model '" + s + "'", 0);
}

inline void write_snapshot(std::ostream& os, const Field& f, double alpha) {
    os << "# t=" << format_double(f.time) << "\n";
    os << "# L=" << format_double(f.grid.half_width) << "\n";
    os << "# N=" << f.grid.num_points << "\n";
    os << "# alpha=" << format_double(alpha) << "\n";
    os << "# tail_left=" << format_tail(f.left) << "\n";
    os << "# tail_right=" << format_tail(f.right) << "\n";
    std::string line;
    for (std::size_t j = 0; j < f.size(); ++j) {
        line = format_double(f.x(j));
        line += ',';
        line += format_double(f.values[j]);
        line += '\n';
        os << line;
    }
}

inline void write_snapshot(const std::string& path, const Field& f, double alpha) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write snapshot " + path);
    write_snapshot(os, f, alpha);
    if (!os) throw Error("failed writing snapshot " + path);
}

struct Snapshot {
    Field field;
    double alpha = 0.5;
};

inline Snapshot read_snapshot(std::istream& is) {
    Snapshot s;
    Field& f = s.field;
    std::string line;
    int lineno = 0;
    bool have_n = false, have_l = false;
    std::size_t count = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos || line.size() < 3) throw ParseError("malformed header", lineno);
            const std::string key = line.substr(2, eq - 2);
            const std::string val = line.substr(eq + 1);
            try {
                if (key == "t") {
                    f.time = std::stod(val);
                } else if (key == "L") {
                    f.grid.half_width = std::stod(val);
                    have_l = true;
                } else if (key == "N") {
                    f.grid.num_points = std::stoul(val);
                    have_n = true;
                } else if (key == "alpha") {
                    s.alpha = std::stod(val);
                } else if (key == "tail_left") {
                    f.left = parse_tail(val);
                } else if (key == "tail_right") {
                    f.right = parse_tail(val);
                } else {
                    throw ParseError("unknown header key '" + key + "'", lineno);
                }
            } catch (const ParseError& e) {
                throw ParseError(e.what(), lineno);
            } catch (const std::logic_error&) {
                throw ParseError("bad header value for '" + key + "'", lineno);
            }
            continue;
        }
        if (!have_n || !have_l) throw ParseError("data before L/N headers", lineno);
        if (f.values.empty()) f.values.assign(f.grid.num_points, 0.0);
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("expected x,u", lineno);
        if (count >= f.grid.num_points) throw ParseError("more rows than N", lineno);
        try {
            f.values[count++] = std::stod(line.substr(comma + 1));
        } catch (const std::logic_error&) {
            throw ParseError("bad value", lineno);
        }
    }
    if (!have_n || !have_l) throw ParseError("missing L or N header", lineno);
    if (count != f.grid.num_points) throw ParseError("expected " + std::to_string(f.grid.num_points) + " rows", lineno);
    f.grid.validate();
    return s;
}

inline Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open snapshot " + path);
    return read_snapshot(is);
}

}  // namespace fkpp
