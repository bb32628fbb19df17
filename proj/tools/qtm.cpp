// qtm — command-line front end: single runs, sweeps, and closed-form analytics

#include "qtm/qtm.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config_path;
    std::string out_dir;
    int workers = 0;
    bool seedless_check = false;
    bool quiet = false;
};

struct AnalyticsArgs {
    std::optional<double> v, D, t;
    double n0 = 0.0;
    double omega_l = 3.0;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

qtm::RunOptions run_options(const qtm::ExperimentConfig& cfg, const fs::path& out, bool quiet) {
    qtm::RunOptions opt;
    opt.out_dir = out;
    opt.workers = cfg.workers;
    if (!quiet) {
        opt.progress = [](const qtm::SweepRecord& r, std::size_t done, std::size_t total) {
            std::cerr << "[" << done << "/" << total << "] " << r.id << " " << qtm::to_string(r.status);
            if (r.fit) std::cerr << " " << qtm::to_string(r.regime) << " v=" << qtm::fmt_num(r.fit->v);
            if (!r.ok()) std::cerr << " (" << r.reason << ")";
            std::cerr << "\n";
        };
    }
    return opt;
}

qtm::SweepOutcome dispatch(const std::string& cmd, const qtm::ExperimentConfig& cfg, const qtm::RunOptions& opt) {
    if (cmd == "run") return qtm::run_single(cfg, opt);
    if (cmd == "phase") return qtm::sweep_phase_diagram(cfg, opt);
    if (cmd == "detuning") return qtm::sweep_detuning(cfg, opt);
    if (cmd == "offset") return qtm::sweep_offset(cfg, opt);
    if (cmd == "weak") return qtm::weak_coupling_suite(cfg, opt);
    throw qtm::ValidationError("unknown command " + cmd);
}

void print_outcome(const std::string& cmd, const qtm::SweepOutcome& out, const fs::path& dir) {
    std::size_t ok = 0;
    for (const auto& r : out.records) ok += r.ok() ? 1 : 0;
    std::cout << cmd << ": " << ok << "/" << out.records.size() << " points ok, results in " << dir.string() << "\n";
    if (out.records.size() == 1 && out.records.front().fit) {
        const auto& r = out.records.front();
        const auto& f = *r.fit;
        std::cout << "  regime " << qtm::to_string(r.regime) << "  v " << qtm::fmt_num(f.v) << "  D " << qtm::fmt_num(f.D)
                  << "  Qdot_h " << qtm::fmt_num(f.qdot_hot) << "  Qdot_c " << qtm::fmt_num(f.qdot_cold) << "  P_l "
                  << qtm::fmt_num(f.p_load) << "  window [" << qtm::fmt_num(f.t_start) << ", " << qtm::fmt_num(f.t_end)
                  << "]\n";
    }
    if (!out.analysis.empty()) std::cout << out.analysis.dump(2) << "\n";
}

// Runs the command a second time with a different worker count and compares every CSV.
int seedless_check(const std::string& cmd, qtm::ExperimentConfig cfg, const fs::path& out, bool quiet) {
    const fs::path check = out / "seedless_check";
    fs::remove_all(check);
    cfg.workers = cfg.workers == 1 ? 2 : 1;
    dispatch(cmd, cfg, run_options(cfg, check, quiet));
    std::size_t files = 0;
    std::vector<std::string> mismatched;
    for (const auto& e : fs::directory_iterator(out)) {
        if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
        ++files;
        const fs::path other = check / e.path().filename();
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) mismatched.push_back(e.path().filename().string());
    }
    for (const auto& e : fs::directory_iterator(check)) {
        if (e.path().extension() == ".csv" && !fs::exists(out / e.path().filename())) {
            mismatched.push_back(e.path().filename().string());
        }
    }
    if (mismatched.empty()) {
        std::cout << "seedless-check: " << files << " CSV files byte-identical with workers = " << cfg.workers << "\n";
        return qtm::kExitOk;
    }
    std::cout << "seedless-check: " << mismatched.size() << " CSV files differ:";
    for (const auto& m : mismatched) std::cout << " " << m;
    std::cout << "\n";
    return qtm::kExitTotal;
}

int analytics_closed_form(const AnalyticsArgs& a) {
    if (!a.v || !a.D || !a.t) throw qtm::ValidationError("analytics needs --v, --D and --t (or --config)");
    const double v = *a.v, D = *a.D, t = *a.t;
    std::cout << "closed forms at t = " << qtm::fmt_num(t) << " (v = " << qtm::fmt_num(v) << ", D = " << qtm::fmt_num(D)
              << ", n0 = " << qtm::fmt_num(a.n0) << ", omega_l = " << qtm::fmt_num(a.omega_l) << ")\n";
    std::cout << "  E_l                " << qtm::fmt_num(qtm::analytic_energy(t, v, D, a.n0, a.omega_l)) << "\n";
    std::cout << "  E_l (n >= 0)       " << qtm::fmt_num(qtm::analytic_energy_erf(t, v, D, a.n0, a.omega_l)) << "\n";
    std::cout << "  S                  " << qtm::fmt_num(qtm::analytic_entropy(t, D)) << "\n";
    std::cout << "  passive energy     " << qtm::fmt_num(qtm::analytic_passive_energy(t, D, a.omega_l)) << "\n";
    std::cout << "  ergotropy          " << qtm::fmt_num(qtm::analytic_ergotropy(t, v, D, a.n0, a.omega_l)) << "\n";
    std::cout << "  ergotropy rate     " << qtm::fmt_num(qtm::analytic_ergotropy_rate(t, v, D, a.omega_l)) << "\n";
    return qtm::kExitOk;
}

// Single run followed by the numeric-vs-closed-form table.
int analytics_from_run(const qtm::ExperimentConfig& cfg, const fs::path& out, bool quiet) {
    auto outcome = qtm::run_single(cfg, run_options(cfg, out, quiet));
    const auto& r = outcome.records.front();
    print_outcome("analytics", outcome, out);
    if (!r.ok()) return outcome.exit_code;
    const auto rows = qtm::analytics_table(*outcome.series, *r.fit, static_cast<double>(cfg.load.initial_level));
    qtm::io::write_text(out / "analytics.csv", qtm::analytics_csv(rows, qtm::config_to_json(cfg)));
    const auto a = qtm::oracle_agreement(rows);
    std::cout << "offset-removed residual std / range over the fit window:\n"
              << "  energy     " << qtm::fmt_num(a.energy) << "\n"
              << "  entropy    " << qtm::fmt_num(a.entropy) << "\n"
              << "  ergotropy  " << qtm::fmt_num(a.ergotropy) << "  (sorted-Gaussian passive state: "
              << qtm::fmt_num(a.ergotropy_sorted) << ")\n";
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qtm: autonomous three-level thermal machine with a quantized load"};
    app.fallthrough();
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "experiment configuration (YAML)");
    app.add_option("--out", g.out_dir, "output directory (overrides output_dir)");
    app.add_option("--workers", g.workers, "worker threads (overrides workers)")->check(CLI::PositiveNumber);
    app.add_flag("--seedless-check", g.seedless_check, "rerun with another worker count and compare CSVs byte for byte");
    app.add_flag("--quiet,-q", g.quiet, "no per-point progress on stderr");

    std::vector<std::pair<std::string, std::string>> commands{
        {"run", "evolve a single configuration"},
        {"phase", "beta_h x g functioning-regime diagram"},
        {"detuning", "drift velocity versus detuning, one curve per g"},
        {"offset", "drift velocity versus initial offset n0"},
        {"weak", "local-generator suite: beta_h x omega_e grid and v(g) curves"},
        {"analytics", "closed-form energy, entropy and ergotropy for given v, D, t"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);
    AnalyticsArgs aa;
    auto* an = app.get_subcommand("analytics");
    an->add_option("--v", aa.v, "drift velocity");
    an->add_option("--D", aa.D, "diffusion coefficient");
    an->add_option("--t", aa.t, "time");
    an->add_option("--n0", aa.n0, "initial mean level");
    an->add_option("--omega-l", aa.omega_l, "load frequency");

    CLI11_PARSE(app, argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        if (cmd == "analytics" && g.config_path.empty()) return analytics_closed_form(aa);
        if (g.config_path.empty()) throw qtm::ValidationError("--config is required for " + cmd);
        qtm::ExperimentConfig cfg = qtm::load_config_file(g.config_path);
        if (g.workers > 0) cfg.workers = g.workers;
        const fs::path out = g.out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(g.out_dir);
        if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;

        if (cmd == "analytics") return analytics_from_run(cfg, out, g.quiet);
        const auto outcome = dispatch(cmd, cfg, run_options(cfg, out, g.quiet));
        print_outcome(cmd, outcome, out);
        int code = outcome.exit_code;
        if (g.seedless_check) {
            const int c = seedless_check(cmd, cfg, out, g.quiet);
            if (c != qtm::kExitOk) code = c;
        }
        return code;
    } catch (const qtm::ParseError& e) {
        std::cerr << "config error";
        if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
        if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
        std::cerr << ": " << e.what() << "\n";
        return qtm::kExitConfig;
    } catch (const qtm::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return qtm::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qtm::kExitTotal;
    }
}
