#pragma once

// Experiment runners behind the command-line tool. Each returns a JSON report and
// writes its artifacts; wall-clock timings go to a separate file so that reports are
// byte-identical across runs.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fkpp/config.hpp"
#include "fkpp/envelopes.hpp"
#include "fkpp/fronts.hpp"
#include "fkpp/kernels.hpp"
#include "fkpp/semigroup.hpp"
#include "fkpp/solver.hpp"

namespace fkpp {

using json = nlohmann::ordered_json;

enum class DataClass { Decaying, Monotone, Other };

inline Field make_heaviside(const GridSpec& g) {
    return sample_field(g, [](double x) { return x > 0.0 ? 1.0 : (x == 0.0 ? 0.5 : 0.0); }, TailModel::constant(0.0),
                        TailModel::constant(1.0));
}

// a0 min(r0, |x|)^(-1-2a)
inline Field make_truncated_power(const GridSpec& g, double alpha, double a0, double r0) {
    const double e = 1.0 + 2.0 * alpha;
    if (a0 * std::pow(r0, -e) > 1.0) throw DomainError("truncated power datum exceeds 1");
    return sample_field(g, [&](double x) { return a0 * std::pow(std::max(r0, std::abs(x)), -e); },
                        TailModel::power_law(a0, e), TailModel::power_law(a0, e));
}

inline Field make_initial_datum(const ExperimentConfig& c) {
    switch (c.datum) {
        case DatumKind::CanonicalDecaying: return canonical_decaying_datum(c.alpha, 1, c.grid);
        case DatumKind::CanonicalMonotone: return canonical_monotone_datum(c.alpha, c.grid);
        case DatumKind::TruncatedPower: return make_truncated_power(c.grid, c.alpha, c.a0, c.r0);
        case DatumKind::Heaviside: return make_heaviside(c.grid);
        case DatumKind::FromFile: {
            Snapshot s = read_snapshot(c.datum_path);
            if (!(s.field.grid == c.grid)) throw DomainError("datum file grid differs from the configured grid");
            s.field.time = 0.0;
            return s.field;
        }
    }
    throw DomainError("unknown datum kind");
}

inline DataClass classify(const Field& u) {
    const auto& l = u.left;
    const auto& r = u.right;
    if (l.far_level() == 0.0 && r.far_level() == 0.0) return DataClass::Decaying;
    if (l.far_level() == 0.0 && r.is_constant() && r.level == 1.0) return DataClass::Monotone;
    return DataClass::Other;
}

// Predicted exponential rate of the front on one side, if the theory gives one.
inline std::optional<double> expected_exponent(const ExperimentConfig& c, DataClass cls, Side side) {
    if (c.expected) return c.expected;
    if (c.alpha >= 1.0) return std::nullopt;  // Gaussian: fronts move linearly
    const double f0 = c.nonlinearity.fprime0();
    if (cls == DataClass::Decaying) return f0 / (1.0 + 2.0 * c.alpha);
    if (cls == DataClass::Monotone && side == Side::Left) return f0 / (2.0 * c.alpha);
    return std::nullopt;
}

inline std::vector<Side> fit_sides(const ExperimentConfig& c, DataClass cls) {
    switch (c.sides) {
        case FitSides::Left: return {Side::Left};
        case FitSides::Right: return {Side::Right};
        case FitSides::Both: return {Side::Left, Side::Right};
        case FitSides::Auto: break;
    }
    return cls == DataClass::Monotone ? std::vector<Side>{Side::Left} : std::vector<Side>{Side::Right};
}

inline std::string trace_file_name(double level) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "trace_%g.csv", level);
    return buf;
}

inline std::string snapshot_file_name(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "snapshot_t%g.csv", t);
    return buf;
}

inline json to_json(const RateEstimate& e) {
    return json{{"slope", e.slope},
                {"intercept", e.intercept},
                {"rms_residual", e.rms_residual},
                {"window", {e.window.first, e.window.second}},
                {"sample_count", e.sample_count}};
}

inline json to_json(const KppNonlinearity& f) {
    json j{{"kind", f.kind() == KppNonlinearity::Kind::Logistic ? "logistic" : "custom"},
           {"fprime0", f.fprime0()},
           {"fprime1", f.fprime1()}};
    if (f.kind() == KppNonlinearity::Kind::Logistic) j["rate"] = f.rate();
    else j["table"] = f.table();
    return j;
}

struct RunResult {
    json report;
    json timings;
    bool all_pass = true;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    os << s;
}

// Evolves the configured datum, traces the level sets, fits rates and writes
// config.ini, report.json, manifest.json, trace_<level>.csv, snapshot_t<t>.csv and
// timings.json into `out`.
inline RunResult run_simulation(const ExperimentConfig& c, const std::filesystem::path& out) {
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();
    std::filesystem::create_directories(out);
    write_text(out / "config.ini", serialize_config(c));

    Field u0 = make_initial_datum(c);
    const DataClass cls = classify(u0);
    SpectralFlow flow(c.grid, KernelSpec::for_alpha(c.alpha));
    const auto t_setup = clock::now();

    std::vector<FrontTrace> traces;
    for (double l : c.levels) {
        FrontTrace tr;
        tr.level = l;
        traces.push_back(tr);
    }
    double umin = HUGE_VAL, umax = -HUGE_VAL, worst_monotone = 0.0;
    const bool check_monotone = cls == DataClass::Monotone || c.datum == DatumKind::Heaviside;
    auto observer = [&](const Field& u) {
        for (auto& tr : traces) tr.record(u);
        for (std::size_t j = 0; j < u.size(); ++j) {
            umin = std::min(umin, u.values[j]);
            umax = std::max(umax, u.values[j]);
            if (check_monotone && j > 0) worst_monotone = std::max(worst_monotone, u.values[j - 1] - u.values[j]);
        }
    };
    SolutionTrajectory traj = evolve(flow, u0, c.schedule, c.nonlinearity, observer);
    const auto t_evolve = clock::now();

    RunResult res;
    json& r = res.report;
    r["name"] = c.name;
    r["config"] = serialize_config(c);
    r["alpha"] = c.alpha;
    r["nonlinearity"] = to_json(c.nonlinearity);
    r["datum"] = to_string(c.datum);
    r["data_class"] = cls == DataClass::Decaying ? "decaying" : cls == DataClass::Monotone ? "monotone" : "other";
    json expected = json::object();
    for (Side s : {Side::Left, Side::Right}) {
        const auto e = expected_exponent(c, cls, s);
        expected[to_string(s)] = e ? json(*e) : json(nullptr);
    }
    r["expected_exponent"] = expected;

    json initial = json::array();
    for (double l : c.levels) {
        const auto x = extract_level_sets(u0, l);
        initial.push_back({{"level", l},
                           {"x_left", x.left ? json(*x.left) : json(nullptr)},
                           {"x_right", x.right ? json(*x.right) : json(nullptr)}});
    }
    r["initial_crossings"] = initial;

    json levels = json::array();
    std::vector<std::string> failures;
    for (const auto& tr : traces) {
        write_trace_csv((out / trace_file_name(tr.level)).string(), tr);
        json lj{{"level", tr.level}, {"trace", trace_file_name(tr.level)}};
        json fits = json::array();
        if (traj.steps > 0) {
            for (Side s : fit_sides(c, cls)) {
                json fj{{"side", to_string(s)}};
                const auto e = expected_exponent(c, cls, s);
                try {
                    const RateEstimate est = fit_exponential_rate(tr, s, c.fit);
                    fj["estimate"] = to_json(est);
                    if (e) {
                        const Verdict v = theorem_verdict(est, *e, c.tolerance);
                        fj["expected"] = *e;
                        fj["tolerance"] = c.tolerance;
                        fj["pass"] = v.pass;
                        if (!v.pass) failures.push_back("level " + format_double(tr.level) + " " + to_string(s));
                    } else {
                        fj["expected"] = nullptr;
                    }
                } catch (const FitError& err) {
                    fj["error"] = err.what();
                    if (e) {
                        fj["pass"] = false;
                        failures.push_back("level " + format_double(tr.level) + " " + to_string(s) + ": " + err.what());
                    }
                }
                fits.push_back(fj);
            }
        }
        lj["fits"] = fits;
        levels.push_back(lj);
    }
    r["levels"] = levels;

    json props{{"max_overshoot", traj.max_overshoot},
               {"overshoot_ok", traj.max_overshoot < 1e-3},
               {"min_value", umin},
               {"max_value", umax},
               {"range_ok", umin >= 0.0 && umax <= 1.0}};
    if (!props["overshoot_ok"].get<bool>()) failures.push_back("overshoot above 1e-3");
    if (check_monotone) {
        props["worst_monotone_defect"] = worst_monotone;
        props["monotone_ok"] = worst_monotone <= c.schedule.eps_cmp(c.schedule.t_end) + 1e-12;
        if (!props["monotone_ok"].get<bool>()) failures.push_back("monotonicity lost");
    }
    r["properties"] = props;

    json snaps = json::array();
    for (const auto& s : traj.snapshots) {
        const std::string name = snapshot_file_name(s.time);
        write_snapshot((out / name).string(), s, c.alpha);
        snaps.push_back({{"t", s.time}, {"path", name}});
    }
    json manifest{{"snapshots", snaps},
                  {"schedule",
                   {{"dt", c.schedule.dt}, {"t_end", c.schedule.t_end}, {"steps", traj.steps},
                    {"snapshot_times", c.schedule.snapshot_times}}},
                  {"nonlinearity", to_json(c.nonlinearity)},
                  {"alpha", c.alpha},
                  {"clamp", {{"max_overshoot", traj.max_overshoot}}}};
    write_text(out / "manifest.json", manifest.dump(2) + "\n");

    res.all_pass = failures.empty();
    r["verdict"] = {{"pass", res.all_pass}, {"failures", failures}};
    write_text(out / "report.json", r.dump(2) + "\n");

    const auto t_end = clock::now();
    auto sec = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    res.timings = {{"setup_s", sec(t_start, t_setup)},
                   {"evolve_s", sec(t_setup, t_evolve)},
                   {"output_s", sec(t_evolve, t_end)},
                   {"total_s", sec(t_start, t_end)},
                   {"threads", threads()}};
    write_text(out / "timings.json", res.timings.dump(2) + "\n");
    return res;
}

// ---------------------------------------------------------------------------
// Kernel suite

inline json run_kernel_check(double alpha, int refine, bool& pass) {
    const KernelSpec spec = KernelSpec::for_alpha(alpha);
    const Kernel k(spec);
    json r{{"alpha", alpha}, {"strategy", to_string(spec.strategy)}};
    pass = true;
    auto check = [&](const char* name, double value, double tol) {
        const bool ok = value <= tol;
        pass = pass && ok;
        r["checks"][name] = {{"value", value}, {"tolerance", tol}, {"pass", ok}};
    };

    double norm = 0.0;
    for (double t : {0.5, 1.0, 2.0}) norm = std::max(norm, normalization_defect(spec, t));
    check("normalization", norm, 1e-6);

    double sym = 0.0, scale = 0.0;
    for (double t : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        for (double x : {0.01, 0.3, 1.0, 2.5, 10.0, 100.0}) {
            sym = std::max(sym, std::abs(k.density(t, x) - k.density(t, -x)));
            const double s = std::pow(t, -1.0 / k.beta());
            scale = std::max(scale, std::abs(k.density(t, x) - s * k.density(1.0, s * x)));
        }
    }
    check("symmetry", sym, spec.strategy == KernelStrategy::FourierInversion ? 1e-10 : 0.0);
    check("scale_invariance", scale, 1e-8);

    const double ck_tol = spec.strategy == KernelStrategy::CauchyClosedForm    ? 1e-6
                          : spec.strategy == KernelStrategy::GaussianClosedForm ? 1e-8
                                                                                : 1e-5;
    double ck = 0.0;
    for (auto [s, t, x] : {std::tuple{1.0, 1.0, 0.0}, std::tuple{0.5, 1.5, 2.0}, std::tuple{2.0, 0.3, 7.0}})
        ck = std::max(ck, chapman_kolmogorov_residual(spec, s, t, x));
    check("chapman_kolmogorov", ck, ck_tol);

    const auto p3 = verify_p3(spec, default_p3_probes(refine));
    const auto p3r = verify_p3(spec, default_p3_probes(2 * refine));
    const double drift = std::abs(p3r.measured_B / p3.measured_B - 1.0);
    r["p3"] = {{"measured_B", p3.measured_B},
               {"max_upper_ratio", p3.max_upper_ratio},
               {"min_lower_ratio", p3.min_lower_ratio},
               {"probes", p3.sample_grid.size()},
               {"refined_measured_B", p3r.measured_B}};
    check("p3_refinement_drift", drift, 0.05);
    if (!std::isfinite(p3.measured_B)) pass = false;

    if (!k.gaussian()) {
        std::vector<double> v;
        for (double x : {1e2, 1e3, 1e4}) v.push_back(std::pow(x, 1.0 + k.beta()) * k.density(1.0, x));
        const double d = std::max(std::abs(v[1] / v[0] - 1.0), std::abs(v[2] / v[1] - 1.0));
        r["tail"] = {{"values", v}, {"limit", k.tail_constant()}};
        check("tail_convergence", d, 0.02);
    }
    r["pass"] = pass;
    return r;
}

// ---------------------------------------------------------------------------
// Envelope suite

inline json to_json(const EnvelopeReport& e) {
    json probes = json::array();
    for (const auto& p : e.probes)
        probes.push_back({{"t", p.t}, {"x", p.x}, {"numeric", p.numeric}, {"expected", p.expected}});
    return json{{"a", e.envelope.a},
                {"b0", e.envelope.b0},
                {"role", to_string(e.envelope.role)},
                {"tolerance", e.tolerance},
                {"worst_error", e.worst_error},
                {"worst_probe", {{"t", e.worst.t}, {"x", e.worst.x}}},
                {"signs_ok", e.signs_ok},
                {"pass", e.pass},
                {"probes", probes}};
}

inline json run_envelope_check(const std::vector<ExplicitEnvelope>& envs, const GridSpec& grid, bool& pass) {
    json r{{"grid", {{"half_width", grid.half_width}, {"num_points", grid.num_points}}},
           {"probe_times", default_envelope_probe_times()},
           {"probe_positions", default_envelope_probe_positions()}};
    json list = json::array();
    pass = true;
    for (const auto& e : envs) {
        const auto rep = verify_envelope_numerically(e, grid, default_envelope_probe_times(),
                                                     default_envelope_probe_positions());
        pass = pass && rep.pass;
        list.push_back(to_json(rep));
    }
    r["envelopes"] = list;
    r["pass"] = pass;
    return r;
}

// ---------------------------------------------------------------------------
// Run summary

struct RunSummary {
    json data;
    std::string table;
    std::vector<std::string> warnings;
};

// Reads report.json and the trace files of a finished run. Throws listing the
// required files when nothing usable is present.
inline RunSummary summarize_run(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    RunSummary s;
    json report;
    const bool has_report = fs::exists(dir / "report.json");
    if (has_report) {
        std::ifstream is(dir / "report.json");
        report = json::parse(is);
    }
    std::vector<std::pair<double, fs::path>> traces;
    if (fs::is_directory(dir)) {
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string n = e.path().filename().string();
            if (n.rfind("trace_", 0) == 0 && e.path().extension() == ".csv")
                traces.emplace_back(std::stod(n.substr(6, n.size() - 10)), e.path());
        }
    }
    std::sort(traces.begin(), traces.end());
    if (!has_report && traces.empty())
        throw Error("no run artifacts in " + dir.string() + "; required: report.json and trace_<level>.csv files");
    if (!has_report) s.warnings.push_back("report.json missing; rates refit with the default window policy");

    double alpha = has_report ? report["alpha"].get<double>() : NAN;
    std::map<double, json> report_levels;
    if (has_report) {
        for (const auto& l : report["levels"]) {
            report_levels[l["level"].get<double>()] = l;
            if (!fs::exists(dir / l["trace"].get<std::string>()))
                s.warnings.push_back("trace file " + l["trace"].get<std::string>() + " missing");
        }
    }

    std::ostringstream tab;
    char line[256];
    std::snprintf(line, sizeof line, "%-8s %-6s %-12s %-10s %-8s\n", "level", "side", "slope", "expected", "verdict");
    tab << line;
    json rows = json::array();
    json diagnostics = json::array();
    for (const auto& [level, path] : traces) {
        const FrontTrace tr = read_trace_csv(path.string(), level);
        auto it = report_levels.find(level);
        std::vector<json> fits;
        if (it != report_levels.end()) {
            for (const auto& f : it->second["fits"]) fits.push_back(f);
        } else {
            if (has_report) s.warnings.push_back("level " + format_double(level) + " not in report.json");
            for (Side side : {Side::Left, Side::Right}) {
                json f{{"side", to_string(side)}};
                try {
                    f["estimate"] = to_json(fit_exponential_rate(tr, side));
                } catch (const FitError& e) {
                    f["error"] = e.what();
                }
                fits.push_back(f);
            }
        }
        for (const auto& f : fits) {
            const bool has_est = f.contains("estimate");
            const double slope = has_est ? f["estimate"]["slope"].get<double>() : NAN;
            const bool has_exp = f.contains("expected") && !f["expected"].is_null();
            const std::string verdict = f.contains("pass") ? (f["pass"].get<bool>() ? "PASS" : "FAIL") : "n/a";
            char sl[32], ex[32];
            std::snprintf(sl, sizeof sl, has_est ? "%.4f" : "-", slope);
            std::snprintf(ex, sizeof ex, has_exp ? "%.4f" : "-", has_exp ? f["expected"].get<double>() : 0.0);
            std::snprintf(line, sizeof line, "%-8g %-6s %-12s %-10s %-8s\n", level,
                          f["side"].get<std::string>().c_str(), sl, ex, verdict.c_str());
            tab << line;
            rows.push_back({{"level", level},
                            {"side", f["side"]},
                            {"slope", has_est ? json(slope) : json(nullptr)},
                            {"expected", has_exp ? f["expected"] : json(nullptr)},
                            {"verdict", verdict}});
        }
        // prefactor diagnostic at integer times
        if (std::isfinite(alpha) && alpha < 1.0 && has_report) {
            const auto& ex = report["expected_exponent"];
            for (const char* side_name : {"right", "left"}) {
                if (ex[side_name].is_null()) continue;
                const Side side = std::string(side_name) == "right" ? Side::Right : Side::Left;
                json series = json::array();
                for (const auto& p : heuristic_prefactor_diagnostic(tr, ex[side_name].get<double>(), alpha, side)) {
                    if (std::abs(p.t - std::round(p.t)) > 1e-9 || p.t < 1.0) continue;
                    series.push_back({{"t", p.t}, {"plain", p.plain}, {"normalized", p.normalized}});
                }
                diagnostics.push_back({{"level", level}, {"side", side_name}, {"series", series}});
                break;
            }
        }
    }
    s.table = tab.str();
    s.data = {{"run", dir.string()}, {"rows", rows}, {"prefactor_diagnostic", diagnostics}, {"warnings", s.warnings}};
    if (has_report) s.data["verdict"] = report["verdict"];
    return s;
}

}  // namespace fkpp
