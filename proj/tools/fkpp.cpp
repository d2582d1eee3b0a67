// fkpp: experiment runner. Exit status 0 = all verdicts pass, 2 = a verdict failed,
// 1 = execution error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fkpp/experiment.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kError = 1;
constexpr int kVerdictFailed = 2;

void emit(const fkpp::json& j, const std::string& out_dir, const std::string& file) {
    const std::string text = j.dump(2) + "\n";
    if (out_dir.empty()) {
        std::cout << text;
        return;
    }
    std::filesystem::create_directories(out_dir);
    fkpp::write_text(std::filesystem::path(out_dir) / file, text);
    std::cout << "wrote " << (std::filesystem::path(out_dir) / file).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional Fisher-KPP fronts: simulation and verification"};
    app.require_subcommand(1);
    int nthreads = 0;
    bool strict = false;
    std::string out_dir;
    app.add_option("--threads", nthreads, "worker threads (default: FKPP_THREADS, else 1)");

    auto* sim = app.add_subcommand("simulate", "evolve a configured experiment and fit front rates");
    std::string config_path;
    sim->add_option("--config", config_path, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out_dir, "output directory (default: the config's [experiment] output)");
    sim->add_flag("--strict", strict, "exit with status 2 when a verdict fails");

    auto* kc = app.add_subcommand("kernel-check", "kernel normalization, symmetry, scaling, semigroup and comparability");
    double kc_alpha = 0.5;
    int kc_refine = 1;
    kc->add_option("--alpha", kc_alpha, "stability index in (0, 1]")->check(CLI::Range(0.0, 1.0));
    kc->add_option("--refine", kc_refine, "probe-grid refinement factor")->check(CLI::PositiveNumber);
    kc->add_option("--out", out_dir, "directory for kernel_check.json (default: stdout)");
    kc->add_flag("--strict", strict, "accepted for uniformity; checks always set the exit status");

    auto* ec = app.add_subcommand("envelope-check", "residuals of the explicit sub/supersolutions");
    std::optional<double> ec_a;
    double ec_b0 = 2.0, ec_L = 4096.0;
    std::size_t ec_N = 65536;
    std::string ec_role = "super";
    ec->add_option("--a", ec_a, "amplitude (default: check a=1 super and a=0.4 sub)");
    ec->add_option("--b0", ec_b0, "initial width");
    ec->add_option("--role", ec_role, "sub or super")->check(CLI::IsMember({"sub", "super"}));
    ec->add_option("--half-width", ec_L, "grid half width");
    ec->add_option("--num-points", ec_N, "grid size");
    ec->add_option("--out", out_dir, "directory for envelope_check.json (default: stdout)");
    ec->add_flag("--strict", strict, "accepted for uniformity; checks always set the exit status");

    auto* ff = app.add_subcommand("front-fit", "fit an exponential rate to a front trace");
    std::string ff_trace, ff_side = "right";
    std::optional<double> ff_tmin, ff_tmax, ff_expected;
    double ff_tol = 0.05, ff_tail = 0.6, ff_cells = 50.0;
    ff->add_option("--trace", ff_trace, "trace CSV")->required()->check(CLI::ExistingFile);
    ff->add_option("--side", ff_side, "left or right")->check(CLI::IsMember({"left", "right"}));
    ff->add_option("--t-min", ff_tmin, "window start");
    ff->add_option("--t-max", ff_tmax, "window end");
    ff->add_option("--tail-fraction", ff_tail, "fraction of the trace kept at its end");
    ff->add_option("--min-cells", ff_cells, "minimum front distance from origin and buffer, in cells");
    ff->add_option("--expected", ff_expected, "expected exponent for a verdict");
    ff->add_option("--tol", ff_tol, "verdict tolerance");
    ff->add_option("--out", out_dir, "directory for front_fit.json (default: stdout)");
    ff->add_flag("--strict", strict, "exit with status 2 when the verdict fails");

    auto* rp = app.add_subcommand("report", "summarize a finished run directory");
    std::string run_dir;
    rp->add_option("run", run_dir, "run directory")->required();
    rp->add_option("--out", out_dir, "directory for summary.json (default: the run directory)");

    CLI11_PARSE(app, argc, argv);
    if (nthreads > 0) fkpp::set_threads(nthreads);

    try {
        if (*sim) {
            fkpp::ExperimentConfig cfg = fkpp::load_config(config_path);
            const std::string out = out_dir.empty() ? cfg.output : out_dir;
            const auto res = fkpp::run_simulation(cfg, out);
            std::cout << "run " << cfg.name << ": " << (res.all_pass ? "all verdicts pass" : "verdict failure")
                      << " (" << out << ")\n";
            for (const auto& f : res.report["verdict"]["failures"]) std::cout << "  failed: " << f.get<std::string>() << "\n";
            return strict && !res.all_pass ? kVerdictFailed : kPass;
        }
        if (*kc) {
            bool pass = false;
            const auto r = fkpp::run_kernel_check(kc_alpha, kc_refine, pass);
            emit(r, out_dir, "kernel_check.json");
            return pass ? kPass : kVerdictFailed;
        }
        if (*ec) {
            std::vector<fkpp::ExplicitEnvelope> envs;
            if (ec_a) {
                envs.push_back({*ec_a, ec_b0, ec_role == "sub" ? fkpp::EnvelopeRole::Sub : fkpp::EnvelopeRole::Super});
            } else {
                envs.push_back({1.0, ec_b0, fkpp::EnvelopeRole::Super});
                envs.push_back({0.4, ec_b0, fkpp::EnvelopeRole::Sub});
            }
            bool pass = false;
            const auto r = fkpp::run_envelope_check(envs, fkpp::GridSpec{ec_L, ec_N}, pass);
            emit(r, out_dir, "envelope_check.json");
            return pass ? kPass : kVerdictFailed;
        }
        if (*ff) {
            const auto tr = fkpp::read_trace_csv(ff_trace);
            fkpp::FitPolicy policy;
            policy.tail_fraction = ff_tail;
            policy.min_cells = ff_cells;
            policy.t_min = ff_tmin;
            policy.t_max = ff_tmax;
            const fkpp::Side side = ff_side == "left" ? fkpp::Side::Left : fkpp::Side::Right;
            const auto est = fkpp::fit_exponential_rate(tr, side, policy);
            fkpp::json r{{"trace", ff_trace}, {"level", tr.level}, {"side", ff_side}, {"estimate", fkpp::to_json(est)}};
            bool pass = true;
            if (ff_expected) {
                const auto v = fkpp::theorem_verdict(est, *ff_expected, ff_tol);
                r["expected"] = *ff_expected;
                r["tolerance"] = ff_tol;
                r["pass"] = v.pass;
                pass = v.pass;
            }
            emit(r, out_dir, "front_fit.json");
            return strict && !pass ? kVerdictFailed : kPass;
        }
        if (*rp) {
            const auto s = fkpp::summarize_run(run_dir);
            std::cout << s.table;
            for (const auto& w : s.warnings) std::cout << "warning: " << w << "\n";
            const std::string dest = out_dir.empty() ? run_dir : out_dir;
            std::filesystem::create_directories(dest);
            fkpp::write_text(std::filesystem::path(dest) / "summary.json", s.data.dump(2) + "\n");
            const bool pass = !s.data.contains("verdict") || s.data["verdict"]["pass"].get<bool>();
            return pass ? kPass : kVerdictFailed;
        }
    } catch (const fkpp::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
