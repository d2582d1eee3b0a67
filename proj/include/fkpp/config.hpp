#pragma once

// Experiment configuration in a small INI dialect.
//
//   file    := { line }
//   line    := blank | comment | section | entry
//   comment := ('#' | ';') text
//   section := '[' name ']'
//   entry   := key '=' value          (surrounding whitespace trimmed)
//
// Keys are unique within a section. Lists are comma separated. Unknown sections or
// keys are errors, reported with their line number.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fkpp/error.hpp"
#include "fkpp/field.hpp"
#include "fkpp/fronts.hpp"
#include "fkpp/solver.hpp"

namespace fkpp {

enum class DatumKind { CanonicalDecaying, CanonicalMonotone, TruncatedPower, Heaviside, FromFile };

inline const char* to_string(DatumKind k) {
    switch (k) {
        case DatumKind::CanonicalDecaying: return "canonical_decaying";
        case DatumKind::CanonicalMonotone: return "canonical_monotone";
        case DatumKind::TruncatedPower: return "truncated_power";
        case DatumKind::Heaviside: return "heaviside";
        case DatumKind::FromFile: return "file";
    }
    return "?";
}

enum class FitSides { Left, Right, Both, Auto };

inline const char* to_string(FitSides s) {
    switch (s) {
        case FitSides::Left: return "left";
        case FitSides::Right: return "right";
        case FitSides::Both: return "both";
        case FitSides::Auto: return "auto";
    }
    return "?";
}

struct ExperimentConfig {
    std::string name = "experiment";
    double alpha = 0.5;
    KppNonlinearity nonlinearity = KppNonlinearity::logistic();
    DatumKind datum = DatumKind::CanonicalDecaying;
    double a0 = 1.0;  // TruncatedPower
    double r0 = 1.0;  // TruncatedPower
    std::string datum_path;
    GridSpec grid{1024.0, 16384};
    EvolveSchedule schedule{0.01, 10.0, {}};
    std::vector<double> levels{0.1, 0.5, 0.9};
    FitPolicy fit;
    FitSides sides = FitSides::Auto;
    std::optional<double> expected;  // override of the predicted exponent
    double tolerance = 0.05;
    std::string output = "run";

    bool operator==(const ExperimentConfig& o) const {
        return name == o.name && alpha == o.alpha && nonlinearity == o.nonlinearity && datum == o.datum &&
               a0 == o.a0 && r0 == o.r0 && datum_path == o.datum_path && grid == o.grid &&
               schedule.dt == o.schedule.dt && schedule.t_end == o.schedule.t_end &&
               schedule.snapshot_times == o.schedule.snapshot_times && levels == o.levels &&
               fit.tail_fraction == o.fit.tail_fraction && fit.min_cells == o.fit.min_cells &&
               fit.t_min == o.fit.t_min && fit.t_max == o.fit.t_max && sides == o.sides && expected == o.expected &&
               tolerance == o.tolerance && output == o.output;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
}

struct Entry {
    std::string value;
    std::size_t line;
};

class Reader {
public:
    explicit Reader(std::map<std::string, std::map<std::string, Entry>> data) : data_(std::move(data)) {}

    bool has(const std::string& sec, const std::string& key) const {
        auto s = data_.find(sec);
        return s != data_.end() && s->second.count(key);
    }
    const Entry* find(const std::string& sec, const std::string& key) {
        auto s = data_.find(sec);
        if (s == data_.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        used_.insert(sec + "." + key);
        return &k->second;
    }
    std::optional<std::string> str(const std::string& sec, const std::string& key) {
        const Entry* e = find(sec, key);
        return e ? std::optional<std::string>(e->value) : std::nullopt;
    }
    std::optional<double> num(const std::string& sec, const std::string& key) {
        const Entry* e = find(sec, key);
        if (!e) return std::nullopt;
        return parse_num(e->value, e->line);
    }
    std::optional<std::vector<double>> list(const std::string& sec, const std::string& key) {
        const Entry* e = find(sec, key);
        if (!e) return std::nullopt;
        std::vector<double> out;
        std::stringstream ss(e->value);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell = trim(cell);
            if (!cell.empty()) out.push_back(parse_num(cell, e->line));
        }
        return out;
    }
    std::size_t line_of(const std::string& sec, const std::string& key) const {
        return data_.at(sec).at(key).line;
    }
    // First entry that was never read, as "section.key" with its line.
    void reject_unused() const {
        for (const auto& [sec, keys] : data_)
            for (const auto& [key, e] : keys)
                if (!used_.count(sec + "." + key)) throw ParseError("unknown key '" + key + "' in [" + sec + "]", e.line);
    }

private:
    static double parse_num(const std::string& s, std::size_t line) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (trim(s.substr(pos)).empty()) return v;
        } catch (const std::exception&) {
        }
        throw ParseError("expected a number, got '" + s + "'", line);
    }

    std::map<std::string, std::map<std::string, Entry>> data_;
    std::set<std::string> used_;
};

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
    std::map<std::string, std::map<std::string, detail::Entry>> data;
    std::string line, section;
    std::size_t lineno = 0;
    static const std::set<std::string> sections{"experiment", "model", "datum", "grid", "schedule", "fronts"};
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError("unterminated section header", lineno);
            section = detail::trim(t.substr(1, t.size() - 2));
            if (!sections.count(section)) throw ParseError("unknown section [" + section + "]", lineno);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        if (section.empty()) throw ParseError("entry before any section", lineno);
        const std::string key = detail::trim(t.substr(0, eq)), value = detail::trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno);
        if (data[section].count(key)) throw ParseError("duplicate key '" + key + "'", lineno);
        data[section][key] = {value, lineno};
    }

    detail::Reader r(std::move(data));
    ExperimentConfig c;
    auto fail = [&](const std::string& sec, const std::string& key, const std::string& msg) -> ParseError {
        return ParseError(msg, r.line_of(sec, key));
    };
    if (auto v = r.str("experiment", "name")) c.name = *v;
    if (auto v = r.str("experiment", "output")) c.output = *v;

    if (auto v = r.num("model", "alpha")) {
        if (!(*v > 0.0 && *v <= 1.0)) throw fail("model", "alpha", "alpha must lie in (0, 1]");
        c.alpha = *v;
    }
    const std::string nl = r.str("model", "nonlinearity").value_or("logistic");
    try {
        if (nl == "logistic") {
            c.nonlinearity = KppNonlinearity::logistic(r.num("model", "rate").value_or(1.0));
        } else if (nl == "custom") {
            auto table = r.list("model", "table");
            if (!table) throw ParseError("custom nonlinearity needs 'table'", r.line_of("model", "nonlinearity"));
            c.nonlinearity = KppNonlinearity::custom(*table);
        } else {
            throw fail("model", "nonlinearity", "nonlinearity must be logistic or custom");
        }
    } catch (const DomainError& e) {
        throw ParseError(e.what(), r.line_of("model", "nonlinearity"));
    }

    if (auto v = r.str("datum", "kind")) {
        if (*v == "canonical_decaying") c.datum = DatumKind::CanonicalDecaying;
        else if (*v == "canonical_monotone") c.datum = DatumKind::CanonicalMonotone;
        else if (*v == "truncated_power") c.datum = DatumKind::TruncatedPower;
        else if (*v == "heaviside") c.datum = DatumKind::Heaviside;
        else if (*v == "file") c.datum = DatumKind::FromFile;
        else throw fail("datum", "kind", "unknown datum kind '" + *v + "'");
    }
    if (auto v = r.num("datum", "a0")) c.a0 = *v;
    if (auto v = r.num("datum", "r0")) c.r0 = *v;
    if (auto v = r.str("datum", "path")) c.datum_path = *v;
    if (c.datum == DatumKind::FromFile) {
        if (c.datum_path.empty()) throw fail("datum", "kind", "datum kind 'file' needs 'path'");
        if (!std::ifstream(c.datum_path)) throw fail("datum", "path", "datum file '" + c.datum_path + "' does not exist");
    }
    if (c.datum == DatumKind::TruncatedPower && (!(c.r0 >= 1.0) || !(c.a0 > 0.0)))
        throw ParseError("truncated_power needs a0 > 0 and r0 >= 1", lineno);

    if (auto v = r.num("grid", "half_width")) c.grid.half_width = *v;
    if (auto v = r.num("grid", "num_points")) {
        if (*v != std::floor(*v) || *v < 4) throw fail("grid", "num_points", "num_points must be an integer >= 4");
        c.grid.num_points = static_cast<std::size_t>(*v);
    }
    try {
        c.grid.validate();
    } catch (const DomainError& e) {
        throw ParseError(e.what(), r.has("grid", "num_points") ? r.line_of("grid", "num_points") : lineno);
    }

    if (auto v = r.num("schedule", "dt")) c.schedule.dt = *v;
    if (auto v = r.num("schedule", "t_end")) c.schedule.t_end = *v;
    if (auto v = r.list("schedule", "snapshots")) c.schedule.snapshot_times = *v;
    try {
        c.schedule.validate(c.nonlinearity);
    } catch (const DomainError& e) {
        throw ParseError(e.what(), r.has("schedule", "dt") ? r.line_of("schedule", "dt") : lineno);
    }

    if (auto v = r.list("fronts", "levels")) {
        for (double l : *v)
            if (!(l > 0.0 && l < 1.0)) throw fail("fronts", "levels", "levels must lie in (0, 1)");
        c.levels = *v;
    }
    if (auto v = r.num("fronts", "tail_fraction")) c.fit.tail_fraction = *v;
    if (auto v = r.num("fronts", "min_cells")) c.fit.min_cells = *v;
    if (auto v = r.num("fronts", "t_min")) c.fit.t_min = *v;
    if (auto v = r.num("fronts", "t_max")) c.fit.t_max = *v;
    if (auto v = r.str("fronts", "sides")) {
        if (*v == "left") c.sides = FitSides::Left;
        else if (*v == "right") c.sides = FitSides::Right;
        else if (*v == "both") c.sides = FitSides::Both;
        else if (*v == "auto") c.sides = FitSides::Auto;
        else throw fail("fronts", "sides", "sides must be left, right, both or auto");
    }
    if (auto v = r.num("fronts", "expected")) c.expected = *v;
    if (auto v = r.num("fronts", "tolerance")) c.tolerance = *v;
    r.reject_unused();
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read config " + path);
    return parse_config(is);
}

inline std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[experiment]\nname = " << c.name << "\noutput = " << c.output << "\n\n";
    os << "[model]\nalpha = " << format_double(c.alpha) << "\n";
    if (c.nonlinearity.kind() == KppNonlinearity::Kind::Logistic) {
        os << "nonlinearity = logistic\nrate = " << format_double(c.nonlinearity.rate()) << "\n";
    } else {
        os << "nonlinearity = custom\ntable = " << detail::join(c.nonlinearity.table()) << "\n";
    }
    os << "\n[datum]\nkind = " << to_string(c.datum) << "\n";
    if (c.datum == DatumKind::TruncatedPower) os << "a0 = " << format_double(c.a0) << "\nr0 = " << format_double(c.r0) << "\n";
    if (c.datum == DatumKind::FromFile) os << "path = " << c.datum_path << "\n";
    os << "\n[grid]\nhalf_width = " << format_double(c.grid.half_width) << "\nnum_points = " << c.grid.num_points
       << "\n\n";
    os << "[schedule]\ndt = " << format_double(c.schedule.dt) << "\nt_end = " << format_double(c.schedule.t_end) << "\n";
    if (!c.schedule.snapshot_times.empty()) os << "snapshots = " << detail::join(c.schedule.snapshot_times) << "\n";
    os << "\n[fronts]\nlevels = " << detail::join(c.levels) << "\ntail_fraction = " << format_double(c.fit.tail_fraction)
       << "\nmin_cells = " << format_double(c.fit.min_cells) << "\n";
    if (c.fit.t_min) os << "t_min = " << format_double(*c.fit.t_min) << "\n";
    if (c.fit.t_max) os << "t_max = " << format_double(*c.fit.t_max) << "\n";
    os << "sides = " << to_string(c.sides) << "\n";
    if (c.expected) os << "expected = " << format_double(*c.expected) << "\n";
    os << "tolerance = " << format_double(c.tolerance) << "\n";
    return os.str();
}

}  // namespace fkpp
