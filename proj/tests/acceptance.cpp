// acceptance — physics acceptance checks, one PASS/FAIL line per criterion.
//
// Exit status: 0 once every criterion has been evaluated (a red criterion is
// reported, not hidden); 1 with --strict when any criterion fails; 4 when a
// criterion could not be evaluated at all.

#include "qtm/qtm.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace qtm;

namespace {

struct Verdict {
    int id = 0;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct Context {
    fs::path out;
    int workers = 1;
    bool quiet = false;
    std::vector<SweepRecord> all;  // every evolution, for the invariant suite
};

// Engine-figure parameters: omega_e = omega_l = 3, eta = 0.005, beta_c = 2.
ExperimentConfig base_config() {
    return parse_config(R"(
machine: {omega_c: 1, omega_e: 3}
load: {kind: harmonic, delta: 0, n_fock: 80, initial_level: 20}
coupling: {g: 0.05, form: full}
baths:
  hot: {eta: 0.005, cutoff: 1, beta: 0.4}
  cold: {eta: 0.005, cutoff: 1, beta: 2.0}
integrator: {tol: 1.0e-8, t_final: 4000, sample_dt: 20}
)");
}

RunOptions options(Context& ctx, const std::string& sub, bool series = false) {
    RunOptions o;
    o.out_dir = ctx.out / sub;
    o.write_series = series;
    o.workers = ctx.workers;
    if (!ctx.quiet) {
        o.progress = [sub](const SweepRecord& r, std::size_t done, std::size_t total) {
            std::cerr << "  " << sub << " [" << done << "/" << total << "] " << r.id << " " << to_string(r.status);
            if (r.fit) std::cerr << " " << to_string(r.regime) << " v=" << fmt_num(r.fit->v);
            std::cerr << "\n";
        };
    }
    return o;
}

void keep(Context& ctx, const SweepOutcome& o) { ctx.all.insert(ctx.all.end(), o.records.begin(), o.records.end()); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : sep) + x;
    return s;
}

std::size_t count_not_ok(const std::vector<SweepRecord>& rs) {
    return static_cast<std::size_t>(std::count_if(rs.begin(), rs.end(), [](const SweepRecord& r) { return !r.ok(); }));
}

// Regime labels along a column with Indeterminate cells dropped and repeats merged.
std::vector<std::string> regime_sequence(const std::vector<const SweepRecord*>& col) {
    std::vector<std::string> seq;
    for (auto* r : col) {
        if (r->regime == RegimeLabel::Indeterminate) continue;
        const std::string l(to_string(r->regime));
        if (seq.empty() || seq.back() != l) seq.push_back(l);
    }
    return seq;
}

// ---------------------------------------------------------------------------

Verdict kms(Context&) {
    double worst = 0.0;
    for (double beta : {0.5, 2.0}) {
        for (double w : {0.5, 1.0, 3.0, 6.0}) {
            const BathSpec b{0.005, 1.0, beta, BathLabel::Hot};
            const double expect = std::exp(-beta * w);
            worst = std::max(worst, std::abs(bath_rate(-w, b) / bath_rate(w, b) - expect) / expect);
        }
    }
    return {2, worst <= 1e-12, "max relative KMS deviation " + fmt_num(worst) + " (limit 1e-12)"};
}

Verdict weak_boundary(Context& ctx) {
    auto cfg = base_config();
    cfg.coupling.g = 5e-4;
    SweepAxis bh{"beta_h", {}};
    for (int k = 0; k <= 5; ++k) bh.values.push_back(cfg.cold.beta * (0.20 + 0.02 * k));
    cfg.sweep = {bh, {"g", {5e-4}}};
    const auto o = sweep_phase_diagram(cfg, options(ctx, "crit3"));
    keep(ctx, o);
    std::vector<const SweepRecord*> col;
    for (const auto& r : o.records) col.push_back(&r);
    std::vector<std::string> flips;
    bool bracket = false;
    double width = NAN;
    for (std::size_t i = 1; i < col.size(); ++i) {
        if (!col[i - 1]->fit || !col[i]->fit) continue;
        if ((col[i - 1]->fit->v > 0.0) == (col[i]->fit->v > 0.0)) continue;
        const double lo = col[i - 1]->beta_h / col[i - 1]->beta_c;
        const double hi = col[i]->beta_h / col[i]->beta_c;
        flips.push_back("[" + fmt_num(lo) + ", " + fmt_num(hi) + "]");
        if (lo <= 0.25 && 0.25 <= hi) {
            bracket = true;
            width = hi - lo;
        }
    }
    const std::size_t bad = count_not_ok(o.records);
    const bool pass = bad == 0 && flips.size() == 1 && bracket && width <= 0.02 + 1e-12;
    return {3, pass,
            "sign flips of v at beta_h/beta_c in " + (flips.empty() ? std::string("none") : join(flips)) +
                (bad ? "; " + std::to_string(bad) + " points not ok" : std::string())};
}

struct RegimeScan {
    bool ordering = false;
    bool suppression = false;
    std::string sequence;
    std::string fridges;
    std::string best_effort;  // labels from every fitted run, stationary or not
};

RegimeScan scan_regimes(Context& ctx, ExperimentConfig cfg, const std::string& sub) {
    SweepAxis bh{"beta_h", {}};
    for (int k = 0; k <= 20; ++k) bh.values.push_back(0.1 + 0.09 * k);
    cfg.sweep = {bh, {"g", {0.25, 0.30, 0.40, 0.50}}};
    const auto o = sweep_phase_diagram(cfg, options(ctx, sub));
    keep(ctx, o);
    auto cols = group_sorted(o.records, "phase", [](const SweepRecord& r) { return r.g; },
                             [](const SweepRecord& r) { return r.beta_h; });
    const std::size_t bad = count_not_ok(o.records);
    const std::string bad_note = bad ? "; " + std::to_string(bad) + " points not ok" : std::string();

    RegimeScan scan;
    const auto seq = regime_sequence(cols[0.25]);
    const std::vector<std::string> want{"Engine", "Accelerator", "Heater", "Refrigerator"};
    scan.ordering = seq == want && bad == 0;
    scan.sequence = "g = 0.25 sequence: " + join(seq, " -> ") + bad_note;

    std::vector<std::string> notes;
    bool pass = bad == 0 && cols.size() == 4;
    for (const auto& [g, col] : cols) {
        std::size_t fridge = 0;
        std::size_t fridge_large = 0;
        for (auto* r : col) {
            if (r->regime != RegimeLabel::Refrigerator) continue;
            ++fridge;
            if (r->beta_h / r->beta_c >= 0.5) ++fridge_large;
        }
        notes.push_back("g = " + fmt_num(g) + ": " + std::to_string(fridge) + " Refrigerator");
        if (g >= 0.40 - 1e-12) pass = pass && fridge == 0;
        if (g <= 0.30 + 1e-12) pass = pass && fridge_large > 0;
    }
    scan.suppression = pass;
    scan.fridges = join(notes) + bad_note;

    std::map<double, std::vector<const SweepRecord*>> fitted;
    for (const auto& r : o.records) {
        if (r.fit) fitted[r.g].push_back(&r);
    }
    std::vector<std::string> cells;
    for (auto& [g, col] : fitted) {
        std::stable_sort(col.begin(), col.end(), [](auto* a, auto* b) { return a->beta_h < b->beta_h; });
        cells.push_back("g = " + fmt_num(g) + ": " + join(regime_sequence(col), " -> "));
    }
    scan.best_effort = join(cells, "; ");
    return scan;
}

// Verdicts use the default load (initial_level 20). The regime boundaries move
// with the effective coupling g*sqrt(n), so the same scan from initial_level 8 is
// reported alongside for information only.
Verdict regimes(Context& ctx, Verdict& suppression) {
    const auto main = scan_regimes(ctx, base_config(), "crit4_5");
    auto low = base_config();
    low.load.initial_level = 8;
    low.load.n_fock = 40;
    const auto info = scan_regimes(ctx, low, "crit4_5_level8");
    suppression = {5, main.suppression,
                   main.fridges + " (info, initial_level 8: " + info.fridges +
                       (info.suppression ? ", would pass)" : ", would fail)")};
    return {4, main.ordering,
            main.sequence + " (info, initial_level 8: " + info.sequence + (info.ordering ? ", would pass" : ", would fail") +
                "; best-effort labels incl. non-stationary runs: " + info.best_effort + ")"};
}

// detuning figure: beta_h = 0.15 beta_c
Verdict detuning(Context& ctx) {
    auto cfg = base_config();
    cfg.hot.beta = 0.15 * cfg.cold.beta;
    SweepAxis unit{"delta", {}};
    for (int k = -20; k <= 20; ++k) unit.values.push_back(k / 20.0);
    cfg.sweep = {unit};
    cfg.suite.detuning_g = {5e-4, 5e-3, 5e-2};
    cfg.suite.detuning_span = {0.05, 0.3, 1.0};
    const auto o = sweep_detuning(cfg, options(ctx, "crit6"));
    keep(ctx, o);

    auto strong = cfg;
    strong.sweep.clear();
    strong.coupling.g = 0.3;
    const auto s = run_single(strong, options(ctx, "crit6_strong"));
    keep(ctx, s);

    std::vector<std::string> notes;
    bool pass = true;
    double last_hwhm = -1.0;
    for (const auto& c : o.analysis["curves"]) {
        const double g = c["g"].get<double>();
        const bool has_peak = !c["delta_peak"].is_null();
        const double peak = has_peak ? c["delta_peak"].get<double>() : NAN;
        const double hw = c["hwhm"].is_null() ? NAN : c["hwhm"].get<double>();
        const auto maxima = c["local_maxima"].get<std::size_t>();
        notes.push_back("g = " + fmt_num(g) + ": maxima " + std::to_string(maxima) + ", delta_peak " + fmt_num(peak) +
                        ", hwhm " + fmt_num(hw));
        pass = pass && maxima == 1 && std::abs(peak) <= 0.1 && std::isfinite(hw) && hw > last_hwhm;
        if (std::isfinite(hw)) last_hwhm = hw;
    }
    pass = pass && o.analysis["curves"].size() == 3;
    const auto& r = s.records.front();
    const bool neg = r.fit && r.fit->v < 0.0;
    notes.push_back("g = 0.3: v(0) = " + (r.fit ? fmt_num(r.fit->v) : std::string(to_string(r.status))));
    const std::size_t bad = count_not_ok(o.records);
    if (bad) notes.push_back(std::to_string(bad) + " of " + std::to_string(o.records.size()) + " points not ok");
    return {6, pass && neg, join(notes, "; ")};
}

Verdict offset(Context& ctx) {
    auto cfg = base_config();
    cfg.sweep = {{"n0", {0, 1, 2, 4, 8, 16, 32}}};
    const auto o = sweep_offset(cfg, options(ctx, "crit7"));
    keep(ctx, o);
    std::vector<std::string> notes;
    bool harmonic = false;
    bool ladder = false;
    for (const auto& c : o.analysis["curves"]) {
        const std::string kind = c["load_kind"];
        const double slope = c["slope"], r2 = c["r2"], var = c["max_relative_variation"];
        if (kind == "harmonic") {
            harmonic = c["points"] == 7 && r2 >= 0.99 && slope < 0.0;
            notes.push_back("harmonic slope " + fmt_num(slope) + " R2 " + fmt_num(r2));
        } else {
            ladder = c["points"] == 7 && var <= 0.01;
            notes.push_back("ladder variation " + fmt_num(var));
        }
    }

    // equivalence g sqrt(n + 16) ~ 4g for n << 16: offset harmonic vs ladder at 4g
    auto low = cfg;
    low.sweep.clear();
    low.load.initial_level = 2;
    low.load.n_fock = 40;
    auto a = low;
    a.load.kind = LoadKind::OffsetHarmonic;
    a.load.offset = 16;
    auto b = low;
    b.load.kind = LoadKind::Ladder;
    b.coupling.g = 4.0 * low.coupling.g;
    const auto records = run_points({{"equiv_0000", "equiv", a, 16.0}, {"equiv_0001", "equiv", b, 0.0}}, options(ctx, "crit7_equiv"));
    ctx.all.insert(ctx.all.end(), records.begin(), records.end());
    // Starting two levels above the wall at n = 0 the walk feels the wall throughout,
    // so neither run reaches a stationary drift; both models share that wall, and
    // their best-effort fits over the same late window are compared instead.
    bool equiv = false;
    if (records[0].fit && records[1].fit && records[0].fit->t_start == records[1].fit->t_start) {
        const double va = records[0].fit->v, vb = records[1].fit->v;
        const double rel = std::abs(va - vb) / std::max(std::abs(va), std::abs(vb));
        equiv = rel <= 0.05;
        const bool stationary = records[0].ok() && records[1].ok();
        notes.push_back("v(n0 = 16, g) = " + fmt_num(va) + " vs ladder v(4g) = " + fmt_num(vb) + " (rel " + fmt_num(rel) +
                        (stationary ? ")" : ", best-effort window [" + fmt_num(records[0].fit->t_start) + ", " +
                                                fmt_num(records[0].fit->t_end) + "])"));
    } else {
        notes.push_back("equivalence runs failed: " + records[0].reason + " / " + records[1].reason);
    }
    return {7, harmonic && ladder && equiv && count_not_ok(o.records) == 0, join(notes, "; ")};
}

Verdict oracles(Context& ctx) {
    auto cfg = base_config();
    cfg.integrator.t_final = 2e4;
    cfg.integrator.sample_dt = 50.0;
    const auto o = run_single(cfg, options(ctx, "crit8", true));
    keep(ctx, o);
    const auto& r = o.records.front();
    if (!r.ok() || !o.series) return {8, false, "evolution " + std::string(to_string(r.status)) + ": " + r.reason};
    const auto rows = analytics_table(*o.series, *r.fit, static_cast<double>(cfg.load.initial_level));
    io::write_text(ctx.out / "crit8" / "analytics.csv", analytics_csv(rows, config_to_json(cfg)));
    const auto a = oracle_agreement(rows);

    // finite-difference residual of the biased diffusion equation at the fitted v, D
    double pde = 0.0;
    const double v = r.fit->v, D = r.fit->D, n0 = static_cast<double>(cfg.load.initial_level), h = 2e-4;
    for (double t : {2000.0, 1e4, 2e4}) {
        const double mu = n0 + v * t;
        const double sd = std::sqrt(2.0 * D * t);
        for (double z : {-2.0, -0.7, 0.0, 0.4, 1.5}) {
            const double n = mu + z * sd;
            auto p = [&](double nn, double tt) { return gaussian_solution(nn, tt, v, D, n0); };
            const double pt = (p(n, t + h) - p(n, t - h)) / (2.0 * h);
            const double pn = (p(n + h, t) - p(n - h, t)) / (2.0 * h);
            const double pnn = (p(n + h, t) - 2.0 * p(n, t) + p(n - h, t)) / (h * h);
            pde = std::max(pde, std::abs(pt + v * pn - D * pnn));
        }
    }
    const bool pass = a.energy <= 0.02 && a.entropy <= 0.02 && a.ergotropy <= 0.02 && pde <= 1e-8;
    return {8, pass,
            "residual std / range: energy " + fmt_num(a.energy) + ", entropy " + fmt_num(a.entropy) + ", ergotropy " +
                fmt_num(a.ergotropy) + " (sorted-Gaussian passive state: " + fmt_num(a.ergotropy_sorted) +
                "); PDE residual " + fmt_num(pde)};
}

// grid axes omega_e x beta_h; the v(g) curves run at omega_e = omega_l = 1
Verdict weak_suite(Context& ctx) {
    auto cfg = base_config();
    cfg.machine.omega_e = 1.0;
    cfg.generator = GeneratorKind::Local;
    cfg.coupling.form = CouplingForm::RWA;
    cfg.coupling.g = 5e-3;
    SweepAxis bh{"beta_h", {}};
    for (int k = 1; k <= 19; ++k) bh.values.push_back(0.1 * k);
    cfg.sweep = {{"omega_e", {1, 2, 3, 4, 5}}, bh};
    for (int k = 0; k <= 12; ++k) cfg.suite.weak.g_values.push_back(std::pow(10.0, -4.0 + k / 3.0));
    cfg.suite.weak.curve_beta_h = {0.2};
    // at saturation v ~ 0.02: a longer horizon walks the load off an 80-level space
    cfg.suite.weak.curve_t_final = 1000.0;
    cfg.suite.weak.curve_sample_dt = 5.0;
    const auto o = weak_coupling_suite(cfg, options(ctx, "crit9"));
    keep(ctx, o);

    const auto w = analyse_weak_grid(o.records, cfg.machine.omega_c);
    double eff = 0.0;
    for (const auto& e : w.efficiency) eff = std::max(eff, e.relative_error);
    long cells = 0;
    bool all_found = !w.boundary.empty();
    for (const auto& b : w.boundary) {
        all_found = all_found && b.found;
        cells = std::max(cells, b.found ? b.cell_offset : 1000L);
    }

    auto curves = group_sorted(o.records, "weak_curve", [](const SweepRecord& r) { return r.beta_h; },
                               [](const SweepRecord& r) { return r.g; });
    std::vector<double> lx, ly;
    bool sign_change = false;
    double sat = NAN;
    std::size_t curve_points = 0;
    if (!curves.empty()) {
        const auto& recs = curves.begin()->second;
        curve_points = recs.size();
        for (auto* r : recs) {
            sign_change = sign_change || (r->fit->v > 0.0) != (recs.front()->fit->v > 0.0);
            if (r->g < 1e-2 && r->fit->v > 0.0) {
                lx.push_back(std::log(r->g));
                ly.push_back(std::log(r->fit->v));
            }
        }
        if (recs.size() >= 2) {
            const auto* a = recs[recs.size() - 2];
            const auto* b = recs.back();
            sat = std::log(std::abs(b->fit->v / a->fit->v)) / std::log(b->g / a->g);
        }
    }
    const double slope = lx.size() >= 2 ? linear_fit(lx, ly).slope : NAN;
    const bool pass = !w.efficiency.empty() && eff <= 0.01 && all_found && cells <= 1 && std::abs(slope - 2.0) <= 0.1 &&
                      sat < 0.5 && !sign_change && curve_points == cfg.suite.weak.g_values.size();
    return {9, pass,
            "efficiency max rel err " + fmt_num(eff) + " over " + std::to_string(w.efficiency.size()) +
                " engine points; boundary max cell offset " + std::to_string(cells) + "; log-log slope (g < 1e-2) " +
                fmt_num(slope) + ", last-decade slope " + fmt_num(sat) + (sign_change ? "; v changes sign" : "") +
                "; " + std::to_string(count_not_ok(o.records)) + " points not ok"};
}

Verdict ergotropy_oracle(Context&) {
    std::uint64_t state = 0x9e3779b97f4a7c15ULL;
    auto next = [&] {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
    };
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = static_cast<std::size_t>(2 + trial % 5);
        std::vector<double> p(d), e(d);
        for (auto& x : p) x = next();
        const double z = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& x : p) x /= z;
        for (auto& x : e) x = 5.0 * next();
        std::vector<std::size_t> perm(d);
        std::iota(perm.begin(), perm.end(), 0);
        double best = INFINITY;
        do {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += p[perm[k]] * e[k];
            best = std::min(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        double mean = 0.0;
        for (std::size_t k = 0; k < d; ++k) mean += p[k] * e[k];
        const auto rho = OperatorMatrix::diagonal(p);
        const auto h = OperatorMatrix::diagonal(e);
        worst = std::max(worst, std::abs(ergotropy(rho, h) - (mean - best)));
    }
    double gibbs = 0.0;
    for (double beta : {0.1, 1.0, 5.0}) {
        std::vector<double> p(6), e(6);
        for (std::size_t k = 0; k < 6; ++k) e[k] = 3.0 * (static_cast<double>(k) + 0.5);
        for (std::size_t k = 0; k < 6; ++k) p[k] = std::exp(-beta * (e[k] - e[0]));
        const double z = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& x : p) x /= z;
        gibbs = std::max(gibbs, std::abs(ergotropy(OperatorMatrix::diagonal(p), OperatorMatrix::diagonal(e))));
    }
    return {10, worst <= 1e-12 && gibbs <= 1e-12,
            "max deviation from permutation search " + fmt_num(worst) + " (200 states); Gibbs " + fmt_num(gibbs)};
}

Verdict determinism(Context& ctx) {
    auto cfg = base_config();
    cfg.load.n_fock = 24;
    cfg.load.initial_level = 5;
    cfg.integrator.t_final = 1600.0;
    cfg.sweep = {{"beta_h", {0.3, 0.8, 1.5}}, {"g", {0.02, 0.3}}};
    auto a = options(ctx, "crit11/w1", true);
    a.workers = 1;
    auto b = options(ctx, "crit11/w3", true);
    b.workers = 3;
    keep(ctx, sweep_phase_diagram(cfg, a));
    keep(ctx, sweep_phase_diagram(cfg, b));
    std::size_t files = 0;
    std::vector<std::string> differ;
    for (const auto& e : fs::directory_iterator(*a.out_dir)) {
        if (e.path().extension() != ".csv") continue;
        ++files;
        if (slurp(e.path()) != slurp(*b.out_dir / e.path().filename())) differ.push_back(e.path().filename().string());
    }
    return {11, differ.empty() && files == 7,
            std::to_string(files) + " CSV files compared between 1 and 3 workers" +
                (differ.empty() ? ", all byte-identical" : "; differing: " + join(differ))};
}

Verdict invariants(const Context& ctx) {
    double trace = 0.0, herm = 0.0, floor = INFINITY, first_law = 0.0;
    std::size_t runs = 0;
    for (const auto& r : ctx.all) {
        if (!r.diagnostics) continue;
        ++runs;
        trace = std::max(trace, r.diagnostics->max_trace_error);
        herm = std::max(herm, r.diagnostics->max_hermiticity_error);
        floor = std::min(floor, r.diagnostics->min_eigenvalue);
        first_law = std::max(first_law, r.diagnostics->max_first_law_residual);
    }
    const bool pass = runs > 0 && trace <= 1e-8 && herm <= 1e-10 && floor >= -1e-8 && first_law <= 1e-8;
    return {1, pass,
            std::to_string(runs) + " runs: max |Tr - 1| " + fmt_num(trace) + ", hermiticity " + fmt_num(herm) +
                ", eigenvalue floor " + fmt_num(floor) + ", first-law residual " + fmt_num(first_law)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"physics acceptance checks"};
    std::string out = "acceptance_out";
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool strict = false;
    bool quiet = false;
    std::vector<int> only;
    app.add_option("--out", out, "directory for the CSVs of every acceptance run");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--only", only, "evaluate only these criteria (1 is always derived from the runs made)");
    app.add_flag("--strict", strict, "exit 1 when any criterion fails");
    app.add_flag("--quiet,-q", quiet, "no per-point progress");
    CLI11_PARSE(app, argc, argv);

    Context ctx{out, workers, quiet, {}};
    const std::set<int> selected(only.begin(), only.end());
    auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };

    std::vector<Verdict> verdicts;
    bool evaluation_error = false;
    auto run = [&](int id, auto&& fn) {
        if (!wanted(id)) return;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            evaluation_error = true;
            v = {id, false, std::string("not evaluated: ") + e.what()};
        }
        v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "criterion " << v.id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << "  ["
                  << fmt_num(std::round(v.seconds)) << " s]" << std::endl;
        verdicts.push_back(v);
    };

    run(2, [&] { return kms(ctx); });
    run(10, [&] { return ergotropy_oracle(ctx); });
    run(3, [&] { return weak_boundary(ctx); });
    Verdict suppression;
    run(4, [&] { return regimes(ctx, suppression); });
    if (wanted(4)) {
        std::cout << "criterion 5: " << (suppression.pass ? "PASS" : "FAIL") << "  " << suppression.detail << std::endl;
        verdicts.push_back(suppression);
    } else if (wanted(5)) {
        run(5, [&] {
            regimes(ctx, suppression);
            return suppression;
        });
    }
    run(6, [&] { return detuning(ctx); });
    run(7, [&] { return offset(ctx); });
    run(8, [&] { return oracles(ctx); });
    run(9, [&] { return weak_suite(ctx); });
    run(11, [&] { return determinism(ctx); });
    if (!ctx.all.empty()) run(1, [&] { return invariants(ctx); });

    std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["criteria"] = nlohmann::ordered_json::array();
    std::size_t passed = 0;
    for (const auto& v : verdicts) {
        passed += v.pass ? 1 : 0;
        j["criteria"].push_back({{"criterion", v.id}, {"pass", v.pass}, {"detail", v.detail}, {"seconds", v.seconds}});
    }
    io::write_text(fs::path(out) / "acceptance.json", j.dump(2) + "\n");
    std::cout << "summary: " << passed << "/" << verdicts.size() << " criteria pass" << std::endl;
    if (evaluation_error) return kExitTotal;
    return strict && passed != verdicts.size() ? 1 : 0;
}
