// sweep.hpp — experiment orchestration: single runs, parameter grids, persistence
//
// A grid point is evaluated in isolation (its own generator, integrator and
// fit); points run on a bounded pool of worker threads and results are
// gathered in grid order, so every output file is independent of the worker
// count and of completion order.

#pragma once

#include "qtm/config.hpp"
#include "qtm/diffusion.hpp"
#include "qtm/evolve.hpp"
#include "qtm/io.hpp"
#include "qtm/master_eq.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

namespace qtm {

enum class RunStatus { Ok, NotConverged, TruncationOverflow, PositivityLoss, StepUnderflow, AmbiguousBinning, Invalid, Failed };

inline std::string_view to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Ok: return "ok";
        case RunStatus::NotConverged: return "not_converged";
        case RunStatus::TruncationOverflow: return "truncation_overflow";
        case RunStatus::PositivityLoss: return "positivity_loss";
        case RunStatus::StepUnderflow: return "step_underflow";
        case RunStatus::AmbiguousBinning: return "ambiguous_binning";
        case RunStatus::Invalid: return "invalid";
        case RunStatus::Failed: return "failed";
    }
    return "failed";
}

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitPartial = 3, kExitTotal = 4 };

struct PointSpec {
    std::string id;
    std::string part;  // which grid the point belongs to: single, phase, detuning, offset, weak_grid, weak_curve
    ExperimentConfig cfg;
    double n0 = 0.0;
};

struct SweepRecord {
    std::string id;
    std::string part;
    GeneratorKind generator = GeneratorKind::Global;
    LoadKind load_kind = LoadKind::Harmonic;
    double omega_e = 0.0;
    double omega_l = 0.0;
    double delta = 0.0;
    double g = 0.0;
    double beta_h = 0.0;
    double beta_c = 0.0;
    double n0 = 0.0;
    Index initial_level = 0;
    RunStatus status = RunStatus::Failed;
    std::string reason;
    std::optional<DriftDiffusionFit> fit;  // absent unless the evolution completed
    RegimeLabel regime = RegimeLabel::Indeterminate;
    std::optional<IntegratorDiagnostics> diagnostics;

    bool ok() const noexcept { return status == RunStatus::Ok; }
};

// ---------------------------------------------------------------------------
// Parameter points

// Applies one swept value to a copy of the base configuration.
//   n0 on a harmonic load turns it into an offset-harmonic load with offset n0;
//   on a ladder (constant matrix elements) it shifts the initial level instead.
inline void apply_axis(ExperimentConfig& c, const ExperimentConfig& base, const std::string& name, double value) {
    if (name == "beta_h") {
        c.hot.beta = value;
    } else if (name == "g") {
        c.coupling.g = value;
    } else if (name == "delta") {
        c.delta = value;
    } else if (name == "omega_e") {
        c.machine.omega_e = value;
        if (!c.delta) c.delta = base.load.omega_l - base.machine.omega_e;  // keep the detuning fixed
    } else if (name == "n0") {
        const auto n0 = static_cast<Index>(value);
        if (base.load.kind == LoadKind::Ladder) {
            c.load.initial_level = base.load.initial_level + n0;
        } else {
            c.load.kind = n0 > 0 ? LoadKind::OffsetHarmonic : LoadKind::Harmonic;
            c.load.offset = n0;
        }
    } else {
        throw ValidationError("unknown sweep parameter " + name);
    }
    c.load.omega_l = c.omega_l();
}

inline std::string point_id(const std::string& part, std::size_t k, std::size_t total) {
    std::string idx = std::to_string(k);
    const std::size_t width = std::max<std::size_t>(4, std::to_string(total > 0 ? total - 1 : 0).size());
    if (idx.size() < width) idx.insert(0, width - idx.size(), '0');
    return part + "_" + idx;
}

// Cartesian product of the given axes; the first axis varies slowest.
inline std::vector<PointSpec> grid_points(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                                          const std::string& part) {
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.values.size();
    std::vector<PointSpec> out;
    out.reserve(total);
    std::vector<std::size_t> idx(axes.size(), 0);
    for (std::size_t k = 0; k < total; ++k) {
        PointSpec p{point_id(part, k, total), part, base, 0.0};
        p.cfg.sweep.clear();
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const double v = axes[a].values[idx[a]];
            apply_axis(p.cfg, base, axes[a].parameter, v);
            if (axes[a].parameter == "n0") p.n0 = v;
        }
        out.push_back(std::move(p));
        for (std::size_t a = axes.size(); a-- > 0;) {
            if (++idx[a] < axes[a].values.size()) break;
            idx[a] = 0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Single evaluation

inline Generator build_generator(const ExperimentConfig& c) {
    LoadSpec l = c.load;
    l.omega_l = c.omega_l();
    if (c.generator == GeneratorKind::Local) return build_local_generator(c.machine, l, c.coupling, c.hot, c.cold, c.gamma0);
    return build_global_generator(c.machine, l, c.coupling, c.hot, c.cold, c.bin_tol);
}

inline IntegratorOptions integrator_options(const ExperimentConfig& c) {
    IntegratorOptions o;
    o.tol = c.integrator.tol;
    o.t_final = c.integrator.t_final;
    o.sample_dt = c.integrator.sample_dt;
    return o;
}

struct PointResult {
    SweepRecord record;
    std::optional<ObservableSeries> series;
};

inline SweepRecord blank_record(const PointSpec& p) {
    SweepRecord r;
    r.id = p.id;
    r.part = p.part;
    r.generator = p.cfg.generator;
    r.load_kind = p.cfg.load.kind;
    r.omega_e = p.cfg.machine.omega_e;
    r.omega_l = p.cfg.omega_l();
    r.delta = p.cfg.detuning();
    r.g = p.cfg.coupling.g;
    r.beta_h = p.cfg.hot.beta;
    r.beta_c = p.cfg.cold.beta;
    r.n0 = p.n0;
    r.initial_level = p.cfg.load.initial_level;
    return r;
}

// Evolves and fits one point. Never throws for physics or numerical failures:
// they become the record status with the reason attached.
inline PointResult evaluate_point(const PointSpec& p) {
    PointResult out{blank_record(p), std::nullopt};
    SweepRecord& r = out.record;
    auto fail = [&](RunStatus s, const std::string& why) {
        r.status = s;
        r.reason = why;
    };
    try {
        p.cfg.validate();
        const Generator gen = build_generator(p.cfg);
        ObservableSeries s = integrate(gen, initial_state(p.cfg.load), integrator_options(p.cfg), p.cfg.omega_l());
        r.diagnostics = s.diagnostics;
        try {
            r.fit = fit_drift_diffusion(s, p.cfg.fit.options());
            r.status = RunStatus::Ok;
        } catch (const TransientNotConverged& e) {
            r.fit = e.fit();
            fail(RunStatus::NotConverged, e.what());
        }
        const auto cls = classify_regime_detailed(r.fit->qdot_hot, r.fit->qdot_cold, r.fit->p_load, p.cfg.fit.dead_band);
        r.regime = cls.label;
        if (r.ok() && !cls.diagnostic.empty()) r.reason = cls.diagnostic;
        out.series = std::move(s);
    } catch (const TruncationOverflow& e) {
        fail(RunStatus::TruncationOverflow, e.what());
    } catch (const PositivityLoss& e) {
        fail(RunStatus::PositivityLoss, e.what());
    } catch (const StepUnderflow& e) {
        fail(RunStatus::StepUnderflow, e.what());
    } catch (const AmbiguousBinning& e) {
        fail(RunStatus::AmbiguousBinning, e.what());
    } catch (const ValidationError& e) {
        fail(RunStatus::Invalid, e.what());
    } catch (const std::exception& e) {
        fail(RunStatus::Failed, e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pool

// Calls f(i) for i in [0, n) on up to `workers` threads. f must not throw.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
    };
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
    if (w <= 1) {
        body();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (std::size_t k = 0; k < w; ++k) pool.emplace_back(body);
}

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;  // series files are written here when set
    bool write_series = true;
    bool write_populations = false;
    int workers = 1;
    std::function<void(const SweepRecord&, std::size_t done, std::size_t total)> progress;
};

inline nlohmann::ordered_json point_json(const PointSpec& p) {
    auto j = config_to_json(p.cfg);
    j.erase("sweep");
    j.erase("suite");
    j["point"] = {{"id", p.id}, {"part", p.part}, {"n0", p.n0}};
    return j;
}

inline nlohmann::ordered_json record_json(const SweepRecord& r) {
    using J = nlohmann::ordered_json;
    J j{{"id", r.id},
        {"part", r.part},
        {"status", std::string(to_string(r.status))},
        {"reason", r.reason},
        {"regime", std::string(to_string(r.regime))}};
    if (r.fit) {
        const auto& f = *r.fit;
        j["fit"] = {{"v", f.v},
                    {"D", f.D},
                    {"sigma2_slope", f.sigma2_slope},
                    {"Qdot_h", f.qdot_hot},
                    {"Qdot_c", f.qdot_cold},
                    {"P_l", f.p_load},
                    {"r2_mu", f.r2_mu},
                    {"r2_sigma", f.r2_sigma},
                    {"t_start", f.t_start},
                    {"t_end", f.t_end},
                    {"n_samples", f.n_samples},
                    {"converged", f.converged}};
    } else {
        j["fit"] = nullptr;
    }
    if (r.diagnostics) j["diagnostics"] = diagnostics_json(*r.diagnostics);
    return j;
}

inline void write_series_files(const std::filesystem::path& dir, const PointSpec& p, const PointResult& res,
                               bool populations) {
    const auto cfg = point_json(p);
    if (res.series) {
        io::write_text(dir / ("series_" + p.id + ".csv"), series_csv(*res.series, cfg));
        if (populations) io::write_text(dir / ("populations_" + p.id + ".csv"), populations_csv(*res.series, cfg));
    }
    auto side = io::provenance_json("series", cfg);
    side["columns"] = series_columns();
    side["record"] = record_json(res.record);
    if (res.series) side["samples"] = res.series->size();
    io::write_text(dir / ("series_" + p.id + ".json"), side.dump(2) + "\n");
}

// Evaluates every point; records come back in input order.
inline std::vector<SweepRecord> run_points(const std::vector<PointSpec>& points, const RunOptions& opt = {}) {
    std::vector<SweepRecord> records(points.size());
    std::mutex mu;
    std::size_t done = 0;
    parallel_for(points.size(), opt.workers, [&](std::size_t i) {
        PointResult res = evaluate_point(points[i]);
        if (opt.out_dir && opt.write_series) {
            try {
                write_series_files(*opt.out_dir, points[i], res, opt.write_populations);
            } catch (const std::exception& e) {
                res.record.status = RunStatus::Failed;
                res.record.reason = e.what();
            }
        }
        records[i] = std::move(res.record);
        std::lock_guard lock(mu);
        ++done;
        if (opt.progress) opt.progress(records[i], done, points.size());
    });
    return records;
}

// ---------------------------------------------------------------------------
// Results files

inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{
        "id",      "part",     "generator",   "load_kind",     "omega_e",    "omega_l",  "delta",
        "g",       "beta_h",   "beta_c",      "beta_ratio",    "n0",         "initial_level",
        "status",  "regime",   "v",           "D",             "Qdot_h",     "Qdot_c",   "P_l",
        "r2_mu",   "r2_sigma", "t_fit_start", "t_fit_end",     "fit_converged", "reason"};
    return cols;
}

inline std::string sweep_csv(const std::vector<SweepRecord>& records, const nlohmann::ordered_json& config) {
    std::string out = io::provenance_lines("sweep", config);
    out += "# fit: window from the earliest sample where drift and heat currents are stationary; D = slope(sigma^2)/2\n";
    io::join_row(out, sweep_columns());
    for (const auto& r : records) {
        std::vector<std::string> row{r.id,
                                     r.part,
                                     std::string(to_string(r.generator)),
                                     std::string(to_string(r.load_kind)),
                                     io::num(r.omega_e),
                                     io::num(r.omega_l),
                                     io::num(r.delta),
                                     io::num(r.g),
                                     io::num(r.beta_h),
                                     io::num(r.beta_c),
                                     io::num(r.beta_h / r.beta_c),
                                     io::num(r.n0),
                                     std::to_string(r.initial_level),
                                     std::string(to_string(r.status))};
        // numbers only where the evolution completed; never placeholders
        const bool has = r.fit.has_value();
        row.push_back(has ? std::string(to_string(r.regime)) : "");
        for (double x : {has ? r.fit->v : NAN, has ? r.fit->D : NAN, has ? r.fit->qdot_hot : NAN,
                         has ? r.fit->qdot_cold : NAN, has ? r.fit->p_load : NAN, has ? r.fit->r2_mu : NAN,
                         has ? r.fit->r2_sigma : NAN, has ? r.fit->t_start : NAN, has ? r.fit->t_end : NAN}) {
            row.push_back(io::num(x));
        }
        row.push_back(has ? (r.fit->converged ? "1" : "0") : "");
        row.push_back(io::quoted(r.reason));
        io::join_row(out, row);
    }
    return out;
}

inline int exit_code_for(const std::vector<SweepRecord>& records) {
    const auto bad = std::count_if(records.begin(), records.end(), [](const SweepRecord& r) { return !r.ok(); });
    if (bad == 0) return kExitOk;
    return static_cast<std::size_t>(bad) == records.size() ? kExitTotal : kExitPartial;
}

inline nlohmann::ordered_json summary_json(const std::string& command, const ExperimentConfig& cfg,
                                           const std::vector<SweepRecord>& records) {
    using J = nlohmann::ordered_json;
    J j = io::provenance_json("summary", config_to_json(cfg, true));
    j["command"] = command;
    std::map<std::string, std::size_t> counts;
    std::map<std::string, std::size_t> regimes;
    J failures = J::array();
    for (const auto& r : records) {
        ++counts[std::string(to_string(r.status))];
        if (r.ok()) ++regimes[std::string(to_string(r.regime))];
        if (!r.ok()) failures.push_back({{"id", r.id}, {"status", std::string(to_string(r.status))}, {"reason", r.reason}});
    }
    const std::size_t n_ok = counts.count("ok") ? counts["ok"] : 0;
    j["points"] = records.size();
    j["ok"] = n_ok;
    j["failed"] = records.size() - n_ok;
    j["failure_rate"] = records.empty() ? 0.0 : static_cast<double>(records.size() - n_ok) / static_cast<double>(records.size());
    j["status_counts"] = counts;
    j["regime_counts"] = regimes;
    j["failures"] = failures;
    j["exit_code"] = exit_code_for(records);
    return j;
}

// ---------------------------------------------------------------------------
// Curve analysis shared by the CLI summaries and the acceptance checks

struct CurveShape {
    std::size_t points = 0;  // usable (ok) points
    std::size_t local_maxima = 0;
    double x_peak = NAN;
    double y_peak = NAN;
    double hwhm = NAN;  // half width at half maximum, linear interpolation; NaN if a side never drops below half
    bool monotone_tails = false;
};

// Shape of y(x) for x sorted ascending.
inline CurveShape curve_shape(const std::vector<double>& x, const std::vector<double>& y) {
    CurveShape c;
    c.points = x.size();
    if (x.size() < 3) return c;
    std::size_t k = 0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        if (y[i] > y[k]) k = i;
    }
    c.x_peak = x[k];
    c.y_peak = y[k];
    for (std::size_t i = 0; i < y.size(); ++i) {
        const bool left = i == 0 || y[i] > y[i - 1];
        const bool right = i + 1 == y.size() || y[i] > y[i + 1];
        if (left && right) ++c.local_maxima;
    }
    c.monotone_tails = true;
    for (std::size_t i = 1; i <= k; ++i) c.monotone_tails = c.monotone_tails && y[i] >= y[i - 1];
    for (std::size_t i = k + 1; i < y.size(); ++i) c.monotone_tails = c.monotone_tails && y[i] <= y[i - 1];
    if (c.y_peak > 0.0) {
        const double half = 0.5 * c.y_peak;
        double xl = NAN;
        double xr = NAN;
        for (std::size_t i = k; i-- > 0;) {
            if (y[i] <= half) {
                xl = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i]);
                break;
            }
        }
        for (std::size_t i = k + 1; i < y.size(); ++i) {
            if (y[i] <= half) {
                xr = x[i - 1] + (y[i - 1] - half) * (x[i] - x[i - 1]) / (y[i - 1] - y[i]);
                break;
            }
        }
        c.hwhm = 0.5 * (xr - xl);
    }
    return c;
}

// Ok records of `part` grouped by a key, each group sorted by a coordinate.
template <class Key, class X>
auto group_sorted(const std::vector<SweepRecord>& records, const std::string& part, Key key, X coord) {
    std::map<std::invoke_result_t<Key, const SweepRecord&>, std::vector<const SweepRecord*>> out;
    for (const auto& r : records) {
        if (r.part == part && r.ok()) out[key(r)].push_back(&r);
    }
    for (auto& [k, v] : out) {
        std::stable_sort(v.begin(), v.end(), [&](auto* a, auto* b) { return coord(*a) < coord(*b); });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Experiments

struct SweepOutcome {
    std::vector<SweepRecord> records;
    nlohmann::ordered_json analysis = nlohmann::ordered_json::object();
    int exit_code = kExitOk;
    std::optional<ObservableSeries> series;  // kept by run_single only
};

namespace detail {

inline void write_outputs(const std::string& command, const ExperimentConfig& cfg, const RunOptions& opt,
                          SweepOutcome& out) {
    out.exit_code = exit_code_for(out.records);
    if (!opt.out_dir) return;
    io::write_text(*opt.out_dir / "sweep.csv", sweep_csv(out.records, config_to_json(cfg)));
    auto summary = summary_json(command, cfg, out.records);
    summary["analysis"] = out.analysis;
    io::write_text(*opt.out_dir / "summary.json", summary.dump(2) + "\n");
}

inline void require_axes(const ExperimentConfig& cfg, std::initializer_list<const char*> required,
                         std::initializer_list<const char*> allowed, const char* where) {
    for (const char* a : required) {
        if (!cfg.axis(a)) throw ValidationError(std::string(where) + " needs a sweep axis " + a);
    }
    for (const auto& a : cfg.sweep) {
        bool ok = false;
        for (const char* name : allowed) ok = ok || a.parameter == name;
        if (!ok) throw ValidationError(std::string(where) + " does not sweep " + a.parameter);
    }
}

}  // namespace detail

// One evolution of the configured point (populations are written too).
inline SweepOutcome run_single(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    if (!cfg.sweep.empty()) throw ValidationError("run: the configuration declares sweep axes; use a sweep command");
    PointSpec p{"single_0000", "single", cfg, 0.0};
    p.cfg.sweep.clear();
    if (cfg.load.kind == LoadKind::OffsetHarmonic) p.n0 = static_cast<double>(cfg.load.offset);
    PointResult res = evaluate_point(p);
    if (opt.out_dir && opt.write_series) {
        try {
            write_series_files(*opt.out_dir, p, res, true);
        } catch (const std::exception& e) {
            res.record.status = RunStatus::Failed;
            res.record.reason = e.what();
        }
    }
    if (opt.progress) opt.progress(res.record, 1, 1);
    SweepOutcome out;
    out.records = {res.record};
    out.series = std::move(res.series);
    detail::write_outputs("run", cfg, opt, out);
    return out;
}

// beta_h x g grid; also reports, per g column, the regime sequence in increasing beta_h.
inline SweepOutcome sweep_phase_diagram(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    detail::require_axes(cfg, {"beta_h", "g"}, {"beta_h", "g"}, "phase");
    SweepOutcome out;
    out.records = run_points(grid_points(cfg, cfg.sweep, "phase"), opt);
    auto cols = group_sorted(out.records, "phase", [](const SweepRecord& r) { return r.g; },
                             [](const SweepRecord& r) { return r.beta_h; });
    auto& a = out.analysis["columns"] = nlohmann::ordered_json::array();
    for (const auto& [g, recs] : cols) {
        std::vector<std::string> seq;
        for (auto* r : recs) {
            const std::string l(to_string(r->regime));
            if (seq.empty() || seq.back() != l) seq.push_back(l);
        }
        a.push_back({{"g", g}, {"regime_sequence", seq}});
    }
    detail::write_outputs("phase", cfg, opt, out);
    return out;
}

// v(delta) curves, one per coupling strength.
inline SweepOutcome sweep_detuning(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    detail::require_axes(cfg, {"delta"}, {"delta", "g"}, "detuning");
    std::vector<double> gs = cfg.suite.detuning_g;
    if (gs.empty()) gs = cfg.axis("g") ? cfg.axis("g")->values : std::vector<double>{cfg.coupling.g};
    std::vector<PointSpec> points;
    if (cfg.suite.detuning_span.empty()) {
        points = grid_points(cfg, {{"g", gs}, *cfg.axis("delta")}, "detuning");
    } else {
        // delta values are fractions of a per-g span
        const auto& unit = cfg.axis("delta")->values;
        for (std::size_t k = 0; k < gs.size(); ++k) {
            SweepAxis d{"delta", {}};
            for (double x : unit) d.values.push_back(x * cfg.suite.detuning_span[k]);
            auto pts = grid_points(cfg, {{"g", {gs[k]}}, d}, "detuning");
            points.insert(points.end(), pts.begin(), pts.end());
        }
        for (std::size_t k = 0; k < points.size(); ++k) points[k].id = point_id("detuning", k, points.size());
    }
    SweepOutcome out;
    out.records = run_points(points, opt);
    auto curves = group_sorted(out.records, "detuning", [](const SweepRecord& r) { return r.g; },
                               [](const SweepRecord& r) { return r.delta; });
    auto& a = out.analysis["curves"] = nlohmann::ordered_json::array();
    for (const auto& [g, recs] : curves) {
        std::vector<double> x, y;
        for (auto* r : recs) {
            x.push_back(r->delta);
            y.push_back(r->fit->v);
        }
        const auto s = curve_shape(x, y);
        auto fin = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
        a.push_back({{"g", g},
                     {"points", s.points},
                     {"local_maxima", s.local_maxima},
                     {"delta_peak", fin(s.x_peak)},
                     {"v_peak", fin(s.y_peak)},
                     {"hwhm", fin(s.hwhm)},
                     {"monotone_tails", s.monotone_tails}});
    }
    detail::write_outputs("detuning", cfg, opt, out);
    return out;
}

// v(n0) for each load kind (harmonic loads get an offset, ladder loads a shifted start).
inline SweepOutcome sweep_offset(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    detail::require_axes(cfg, {"n0"}, {"n0", "beta_h", "g"}, "offset");
    std::vector<LoadKind> kinds = cfg.suite.offset_kinds;
    if (kinds.empty()) kinds = {LoadKind::Harmonic, LoadKind::Ladder};
    std::vector<PointSpec> points;
    for (LoadKind k : kinds) {
        ExperimentConfig base = cfg;
        base.load.kind = k;
        base.load.offset = 0;
        auto pts = grid_points(base, cfg.sweep, std::string("offset_") + std::string(to_string(k)));
        points.insert(points.end(), pts.begin(), pts.end());
    }
    SweepOutcome out;
    out.records = run_points(points, opt);
    auto& a = out.analysis["curves"] = nlohmann::ordered_json::array();
    for (LoadKind k : kinds) {
        const std::string part = std::string("offset_") + std::string(to_string(k));
        auto curves = group_sorted(out.records, part,
                                   [](const SweepRecord& r) { return std::pair(r.beta_h, r.g); },
                                   [](const SweepRecord& r) { return r.n0; });
        for (const auto& [key, recs] : curves) {
            (void)key;
            std::vector<double> x, y;
            for (auto* r : recs) {
                x.push_back(r->n0);
                y.push_back(r->fit->v);
            }
            const auto lf = linear_fit(x, y);
            const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
            double ref = 0.0;
            for (double v : y) ref = std::max(ref, std::abs(v));
            a.push_back({{"load_kind", std::string(to_string(k))},
                         {"beta_h", recs.front()->beta_h},
                         {"g", recs.front()->g},
                         {"points", recs.size()},
                         {"slope", lf.slope},
                         {"r2", lf.r2},
                         {"max_relative_variation", y.empty() || ref == 0.0 ? 0.0 : (*hi - *lo) / ref}});
        }
    }
    detail::write_outputs("offset", cfg, opt, out);
    return out;
}

// Efficiency and sign-boundary comparisons for the local-generator grid.
struct WeakAnalysis {
    struct EfficiencyRow {
        std::string id;
        double omega_e, beta_h, numeric, theory, relative_error;
    };
    struct BoundaryRow {
        double omega_e;
        double theory;         // beta_h where beta_h omega_h = beta_c omega_c
        double lower = NAN;    // last beta_h with P_l > 0 before the first sign change
        double upper = NAN;    // first beta_h with P_l < 0
        long cell_offset = 0;  // grid cells between the numeric bracket and the theory value
        bool found = false;
    };
    std::vector<EfficiencyRow> efficiency;
    std::vector<BoundaryRow> boundary;
};

inline WeakAnalysis analyse_weak_grid(const std::vector<SweepRecord>& records, double omega_c) {
    WeakAnalysis w;
    auto cols = group_sorted(records, "weak_grid", [](const SweepRecord& r) { return r.omega_e; },
                             [](const SweepRecord& r) { return r.beta_h; });
    for (const auto& [we, recs] : cols) {
        for (auto* r : recs) {
            if (r->regime != RegimeLabel::Engine) continue;
            const double eta = r->fit->p_load / r->fit->qdot_hot;
            const double th = efficiencies(omega_c, we, r->beta_h, r->beta_c).engine;
            w.efficiency.push_back({r->id, we, r->beta_h, eta, th, std::abs(eta - th) / th});
        }
        WeakAnalysis::BoundaryRow b{we, scovil_schulz_boundary(omega_c, omega_c + we, recs.empty() ? 1.0 : recs.front()->beta_c)};
        for (std::size_t i = 1; i < recs.size(); ++i) {
            if (recs[i - 1]->fit->p_load > 0.0 && recs[i]->fit->p_load < 0.0) {
                b.lower = recs[i - 1]->beta_h;
                b.upper = recs[i]->beta_h;
                b.found = true;
                // cell containing the theory value, counted against the bracket cell i-1
                long cell = -1;
                for (std::size_t j = 1; j < recs.size(); ++j) {
                    if (recs[j - 1]->beta_h <= b.theory && b.theory <= recs[j]->beta_h) cell = static_cast<long>(j);
                }
                if (cell < 0) cell = b.theory < recs.front()->beta_h ? 0 : static_cast<long>(recs.size());
                b.cell_offset = std::abs(cell - static_cast<long>(i));
                break;
            }
        }
        w.boundary.push_back(b);
    }
    return w;
}

inline std::string weak_efficiency_csv(const WeakAnalysis& w, const nlohmann::ordered_json& config) {
    std::string out = io::provenance_lines("weak_efficiency", config);
    io::join_row(out, {"id", "omega_e", "beta_h", "eta_numeric", "eta_theory", "relative_error"});
    for (const auto& e : w.efficiency) {
        io::join_row(out, {e.id, io::num(e.omega_e), io::num(e.beta_h), io::num(e.numeric), io::num(e.theory),
                           io::num(e.relative_error)});
    }
    return out;
}

inline std::string weak_boundary_csv(const WeakAnalysis& w, const nlohmann::ordered_json& config) {
    std::string out = io::provenance_lines("weak_boundary", config);
    io::join_row(out, {"omega_e", "beta_h_theory", "beta_h_lower", "beta_h_upper", "found", "cell_offset"});
    for (const auto& b : w.boundary) {
        io::join_row(out, {io::num(b.omega_e), io::num(b.theory), io::num(b.lower), io::num(b.upper), b.found ? "1" : "0",
                           std::to_string(b.cell_offset)});
    }
    return out;
}

// Local-generator suite: beta_h x omega_e grid and v(g) curves for several beta_h.
inline SweepOutcome weak_coupling_suite(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    detail::require_axes(cfg, {"beta_h", "omega_e"}, {"beta_h", "omega_e"}, "weak");
    ExperimentConfig base = cfg;
    base.generator = GeneratorKind::Local;
    base.coupling.form = CouplingForm::RWA;
    auto points = grid_points(base, cfg.sweep, "weak_grid");
    if (!cfg.suite.weak.g_values.empty()) {
        ExperimentConfig curve = base;
        curve.integrator.t_final = cfg.suite.weak.curve_t_final;
        curve.integrator.sample_dt = cfg.suite.weak.curve_sample_dt;
        std::vector<double> bh = cfg.suite.weak.curve_beta_h;
        if (bh.empty()) bh = {cfg.hot.beta};
        auto pts = grid_points(curve, {{"beta_h", bh}, {"g", cfg.suite.weak.g_values}}, "weak_curve");
        points.insert(points.end(), pts.begin(), pts.end());
    }
    SweepOutcome out;
    out.records = run_points(points, opt);

    const auto w = analyse_weak_grid(out.records, cfg.machine.omega_c);
    double worst = 0.0;
    for (const auto& e : w.efficiency) worst = std::max(worst, e.relative_error);
    long worst_cell = 0;
    for (const auto& b : w.boundary) worst_cell = std::max(worst_cell, b.found ? b.cell_offset : 1000L);
    out.analysis["efficiency"] = {{"engine_points", w.efficiency.size()}, {"max_relative_error", worst}};
    out.analysis["boundary"] = {{"columns", w.boundary.size()}, {"max_cell_offset", worst_cell}};
    auto curves = group_sorted(out.records, "weak_curve", [](const SweepRecord& r) { return r.beta_h; },
                               [](const SweepRecord& r) { return r.g; });
    auto& a = out.analysis["v_of_g"] = nlohmann::ordered_json::array();
    for (const auto& [bh, recs] : curves) {
        bool sign_change = false;
        for (std::size_t i = 1; i < recs.size(); ++i) {
            sign_change = sign_change || (recs[i]->fit->v > 0.0) != (recs[0]->fit->v > 0.0);
        }
        a.push_back({{"beta_h", bh}, {"points", recs.size()}, {"sign_change", sign_change}});
    }
    if (opt.out_dir) {
        const auto c = config_to_json(cfg);
        io::write_text(*opt.out_dir / "weak_efficiency.csv", weak_efficiency_csv(w, c));
        io::write_text(*opt.out_dir / "weak_boundary.csv", weak_boundary_csv(w, c));
    }
    detail::write_outputs("weak", cfg, opt, out);
    return out;
}

}  // namespace qtm
