// config.hpp — experiment configuration: YAML parsing, validation, resolved JSON form
//
// Format (all sections optional except the bath inverse temperatures):
//
//   machine:    {omega_c: 1.0, omega_e: 3.0}
//   load:       {kind: harmonic, omega_l: 3.0 | delta: 0.0, offset: 0, n_fock: 80, initial_level: 20}
//   coupling:   {g: 0.05, form: full}      (form defaults to rwa under the local generator)
//   baths:
//     hot:      {eta: 0.005, cutoff: 1.0, beta: 0.4}
//     cold:     {eta: 0.005, cutoff: 1.0, beta: 2.0}
//   generator:  {kind: global, bin_tol: 1e-8, gamma0: 0.05}
//   integrator: {tol: 1e-8, t_final: 4000, sample_dt: 20}
//   fit:        {dead_band: 1e-3, slope_stability: 0.05, current_stability: 0.05,
//               balance_tolerance: 0.01, min_samples: 50}
//   sweep:
//     - {parameter: beta_h, range: {start: 0.1, stop: 1.9, count: 21}}
//     - {parameter: g, values: [0.0005, 0.05, 0.25]}
//   suite:      {detuning_g: [...], detuning_span: [...], offset_kinds: [harmonic, ladder],
//                weak: {g_values: [...], curve_beta_h: [...], curve_t_final: 2000, curve_sample_dt: 10}}
//   output_dir: out
//   workers: 1
//
// Sweep axes: beta_h, g, delta, n0, omega_e. Values come from `values`,
// `range` (linear, endpoints included) or `logspace` (log-uniform between the
// given endpoint values).

#pragma once

#include "qtm/diffusion.hpp"
#include "qtm/errors.hpp"
#include "qtm/master_eq.hpp"
#include "qtm/model.hpp"

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace qtm {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct IntegratorSettings {
    double tol = 1e-8;
    double t_final = 4000.0;
    double sample_dt = 20.0;
};

struct FitSettings {
    double dead_band = kDefaultDeadBand;
    double slope_stability = 0.05;
    double current_stability = 0.05;
    double balance_tolerance = 0.01;
    std::size_t min_samples = 50;

    FitOptions options() const {
        FitOptions o;
        o.min_samples = min_samples;
        o.slope_stability = slope_stability;
        o.current_stability = current_stability;
        o.balance_tolerance = balance_tolerance;
        return o;
    }
};

struct SweepAxis {
    std::string parameter;
    std::vector<double> values;
};

struct WeakSuiteSettings {
    std::vector<double> g_values;
    std::vector<double> curve_beta_h;
    double curve_t_final = 2000.0;
    double curve_sample_dt = 10.0;
};

struct SuiteSettings {
    std::vector<double> detuning_g;
    // Optional per-g scale: with it the delta axis is read in units of the span for each g.
    std::vector<double> detuning_span;
    std::vector<LoadKind> offset_kinds;
    WeakSuiteSettings weak;
};

struct ExperimentConfig {
    MachineSpec machine;
    LoadSpec load;
    std::optional<double> delta;  // when set, omega_l = omega_e + delta
    CouplingSpec coupling;
    BathSpec hot{0.005, 1.0, 1.0, BathLabel::Hot};
    BathSpec cold{0.005, 1.0, 1.0, BathLabel::Cold};
    GeneratorKind generator = GeneratorKind::Global;
    double bin_tol = kDefaultBinTol;
    double gamma0 = kDefaultGamma0;
    IntegratorSettings integrator;
    FitSettings fit;
    std::vector<SweepAxis> sweep;
    SuiteSettings suite;
    std::string output_dir = "out";
    int workers = 1;

    // omega_l after detuning resolution
    double omega_l() const { return delta ? machine.omega_e + *delta : load.omega_l; }
    double detuning() const { return omega_l() - machine.omega_e; }

    const SweepAxis* axis(const std::string& name) const {
        for (const auto& a : sweep) {
            if (a.parameter == name) return &a;
        }
        return nullptr;
    }

    void validate() const {
        machine.validate();
        coupling.validate();
        hot.validate();
        cold.validate();
        LoadSpec l = load;
        l.omega_l = omega_l();
        l.validate();
        if (generator == GeneratorKind::Local && coupling.form != CouplingForm::RWA) {
            throw ValidationError("generator.kind = local requires coupling.form = rwa");
        }
        if (!(bin_tol > 0.0)) throw ValidationError("generator.bin_tol must be > 0");
        if (!(gamma0 > 0.0)) throw ValidationError("generator.gamma0 must be > 0");
        if (!(integrator.tol > 0.0)) throw ValidationError("integrator.tol must be > 0");
        if (!(integrator.t_final > 0.0)) throw ValidationError("integrator.t_final must be > 0");
        if (!(integrator.sample_dt > 0.0) || integrator.sample_dt > integrator.t_final) {
            throw ValidationError("integrator.sample_dt must lie in (0, t_final]");
        }
        if (!(fit.dead_band >= 0.0)) throw ValidationError("fit.dead_band must be >= 0");
        if (fit.min_samples < 4) throw ValidationError("fit.min_samples must be >= 4");
        if (workers < 1) throw ValidationError("workers must be a positive integer");
        if (!suite.detuning_span.empty() && suite.detuning_span.size() != suite.detuning_g.size()) {
            throw ValidationError("suite.detuning_span needs one entry per suite.detuning_g value");
        }
        for (double w : suite.detuning_span) {
            if (!(w > 0.0)) throw ValidationError("suite.detuning_span entries must be > 0");
        }
        std::set<std::string> seen;
        for (const auto& a : sweep) {
            if (!seen.insert(a.parameter).second) throw ValidationError("sweep axis repeated: " + a.parameter);
            if (a.values.empty()) throw ValidationError("sweep axis " + a.parameter + " has no values");
            for (double v : a.values) {
                if (!std::isfinite(v)) throw ValidationError("sweep axis " + a.parameter + " has a non-finite value");
                if (a.parameter == "n0" && (v < 0.0 || v != std::floor(v))) {
                    throw ValidationError("sweep axis n0 takes non-negative integers");
                }
            }
        }
    }
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

class ConfigReader {
public:
    template <class T>
    static T scalar(const YAML::Node& n, const std::string& field) {
        if (!n.IsScalar()) throw ParseError("config: " + field + " must be a scalar", line_of(n), field);
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            throw ParseError("config: cannot read " + field + " from '" + n.Scalar() + "'", line_of(n), field);
        }
    }

    static double number(const YAML::Node& n, const std::string& field) {
        const double v = scalar<double>(n, field);
        if (!std::isfinite(v)) throw ParseError("config: " + field + " must be finite", line_of(n), field);
        return v;
    }

    static Index integer(const YAML::Node& n, const std::string& field) {
        const double v = number(n, field);
        if (v != std::floor(v)) throw ParseError("config: " + field + " must be an integer", line_of(n), field);
        return static_cast<Index>(v);
    }

    static std::vector<double> number_list(const YAML::Node& n, const std::string& field) {
        if (!n.IsSequence()) throw ParseError("config: " + field + " must be a list", line_of(n), field);
        std::vector<double> out;
        for (std::size_t k = 0; k < n.size(); ++k) out.push_back(number(n[k], field + "[" + std::to_string(k) + "]"));
        return out;
    }

    static void require_map(const YAML::Node& n, const std::string& field) {
        if (!n.IsMap()) throw ParseError("config: " + field + " must be a mapping", line_of(n), field);
    }

    // Rejects keys outside the allowed set.
    static void check_keys(const YAML::Node& n, const std::string& section, std::initializer_list<const char*> allowed) {
        require_map(n, section.empty() ? "<root>" : section);
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) {
                const std::string field = section.empty() ? key : section + "." + key;
                throw ParseError("config: unknown field " + field, line_of(kv.first), field);
            }
        }
    }
};

inline LoadKind parse_load_kind(const YAML::Node& n, const std::string& field) {
    const auto s = ConfigReader::scalar<std::string>(n, field);
    if (s == "harmonic") return LoadKind::Harmonic;
    if (s == "ladder") return LoadKind::Ladder;
    if (s == "offset_harmonic") return LoadKind::OffsetHarmonic;
    throw ParseError("config: " + field + " must be harmonic, ladder or offset_harmonic", line_of(n), field);
}

inline std::vector<double> parse_axis_values(const YAML::Node& n, const std::string& field) {
    using R = ConfigReader;
    R::check_keys(n, field, {"parameter", "values", "range", "logspace"});
    const int forms = (n["values"] ? 1 : 0) + (n["range"] ? 1 : 0) + (n["logspace"] ? 1 : 0);
    if (forms != 1) throw ParseError("config: " + field + " needs exactly one of values, range, logspace", line_of(n), field);
    if (n["values"]) return R::number_list(n["values"], field + ".values");
    const bool log = static_cast<bool>(n["logspace"]);
    const std::string sub = field + (log ? ".logspace" : ".range");
    const YAML::Node r = log ? n["logspace"] : n["range"];
    R::check_keys(r, sub, {"start", "stop", "count"});
    for (const char* k : {"start", "stop", "count"}) {
        if (!r[k]) throw ParseError("config: " + sub + "." + k + " is required", line_of(r), sub + "." + k);
    }
    const double a = R::number(r["start"], sub + ".start");
    const double b = R::number(r["stop"], sub + ".stop");
    const Index count = R::integer(r["count"], sub + ".count");
    if (count < 1) throw ParseError("config: " + sub + ".count must be >= 1", line_of(r["count"]), sub + ".count");
    if (log && (a <= 0.0 || b <= 0.0)) throw ParseError("config: " + sub + " endpoints must be > 0", line_of(r), sub);
    std::vector<double> out;
    for (Index k = 0; k < count; ++k) {
        const double f = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
        out.push_back(log ? std::exp(std::log(a) + f * (std::log(b) - std::log(a))) : a + f * (b - a));
    }
    return out;
}

inline void parse_bath(const YAML::Node& n, const std::string& field, BathSpec& b) {
    using R = ConfigReader;
    R::check_keys(n, field, {"eta", "cutoff", "beta"});
    if (n["eta"]) b.eta = R::number(n["eta"], field + ".eta");
    if (n["cutoff"]) b.cutoff = R::number(n["cutoff"], field + ".cutoff");
    if (!n["beta"]) throw ValidationError(field + ".beta is required");
    b.beta = R::number(n["beta"], field + ".beta");
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
    using R = detail::ConfigReader;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(std::string("config: ") + e.msg, e.mark.line + 1, {});
    }
    if (!root || root.IsNull()) throw ValidationError("config: empty document");
    R::check_keys(root, "", {"machine", "load", "coupling", "baths", "generator", "integrator", "fit", "sweep", "suite",
                             "output_dir", "workers"});
    ExperimentConfig cfg;

    if (const auto m = root["machine"]) {
        R::check_keys(m, "machine", {"omega_c", "omega_e"});
        if (m["omega_c"]) cfg.machine.omega_c = R::number(m["omega_c"], "machine.omega_c");
        if (m["omega_e"]) cfg.machine.omega_e = R::number(m["omega_e"], "machine.omega_e");
    }
    if (cfg.machine.omega_c != 1.0) {
        throw ValidationError("machine.omega_c is the unit of frequency and must be 1");
    }

    bool omega_l_given = false;
    bool n_fock_given = false;
    if (const auto l = root["load"]) {
        R::check_keys(l, "load", {"kind", "omega_l", "delta", "offset", "n_fock", "initial_level"});
        if (l["kind"]) cfg.load.kind = detail::parse_load_kind(l["kind"], "load.kind");
        if (l["omega_l"]) {
            cfg.load.omega_l = R::number(l["omega_l"], "load.omega_l");
            omega_l_given = true;
        }
        if (l["delta"]) cfg.delta = R::number(l["delta"], "load.delta");
        if (l["offset"]) cfg.load.offset = R::integer(l["offset"], "load.offset");
        if (l["initial_level"]) cfg.load.initial_level = R::integer(l["initial_level"], "load.initial_level");
        if (l["n_fock"]) {
            cfg.load.n_fock = R::integer(l["n_fock"], "load.n_fock");
            n_fock_given = true;
        }
    }
    if (!n_fock_given) cfg.load.n_fock = default_fock_dimension(cfg.load.initial_level);
    if (omega_l_given && cfg.delta) {
        const double implied = cfg.machine.omega_e + *cfg.delta;
        if (std::abs(implied - cfg.load.omega_l) > 1e-12 * std::max(1.0, std::abs(implied))) {
            throw ValidationError("load.delta = " + fmt_num(*cfg.delta) + " implies omega_l = " + fmt_num(implied) +
                                  " but load.omega_l = " + fmt_num(cfg.load.omega_l));
        }
    }
    if (!omega_l_given && !cfg.delta) cfg.delta = 0.0;  // resonant by default
    cfg.load.omega_l = cfg.omega_l();

    bool form_given = false;
    if (const auto c = root["coupling"]) {
        R::check_keys(c, "coupling", {"g", "form"});
        if (c["g"]) cfg.coupling.g = R::number(c["g"], "coupling.g");
        if (c["form"]) {
            form_given = true;
            const auto f = R::scalar<std::string>(c["form"], "coupling.form");
            if (f == "full") cfg.coupling.form = CouplingForm::Full;
            else if (f == "rwa") cfg.coupling.form = CouplingForm::RWA;
            else throw ParseError("config: coupling.form must be full or rwa", detail::line_of(c["form"]), "coupling.form");
        }
    }

    const auto baths = root["baths"];
    if (!baths) throw ValidationError("baths section with hot.beta and cold.beta is required");
    R::check_keys(baths, "baths", {"hot", "cold"});
    if (!baths["hot"]) throw ValidationError("baths.hot.beta is required");
    if (!baths["cold"]) throw ValidationError("baths.cold.beta is required");
    detail::parse_bath(baths["hot"], "baths.hot", cfg.hot);
    detail::parse_bath(baths["cold"], "baths.cold", cfg.cold);

    if (const auto g = root["generator"]) {
        R::check_keys(g, "generator", {"kind", "bin_tol", "gamma0"});
        if (g["kind"]) {
            const auto k = R::scalar<std::string>(g["kind"], "generator.kind");
            if (k == "global") cfg.generator = GeneratorKind::Global;
            else if (k == "local") cfg.generator = GeneratorKind::Local;
            else throw ParseError("config: generator.kind must be global or local", detail::line_of(g["kind"]), "generator.kind");
        }
        if (g["bin_tol"]) cfg.bin_tol = R::number(g["bin_tol"], "generator.bin_tol");
        if (g["gamma0"]) cfg.gamma0 = R::number(g["gamma0"], "generator.gamma0");
    }

    // the local generator is defined for the RWA coupling only
    if (cfg.generator == GeneratorKind::Local && !form_given) cfg.coupling.form = CouplingForm::RWA;

    if (const auto i = root["integrator"]) {
        R::check_keys(i, "integrator", {"tol", "t_final", "sample_dt"});
        if (i["tol"]) cfg.integrator.tol = R::number(i["tol"], "integrator.tol");
        if (i["t_final"]) cfg.integrator.t_final = R::number(i["t_final"], "integrator.t_final");
        if (i["sample_dt"]) cfg.integrator.sample_dt = R::number(i["sample_dt"], "integrator.sample_dt");
    }

    if (const auto f = root["fit"]) {
        R::check_keys(f, "fit", {"dead_band", "slope_stability", "current_stability", "balance_tolerance",
                                "min_samples"});
        if (f["dead_band"]) cfg.fit.dead_band = R::number(f["dead_band"], "fit.dead_band");
        if (f["slope_stability"]) cfg.fit.slope_stability = R::number(f["slope_stability"], "fit.slope_stability");
        if (f["current_stability"]) cfg.fit.current_stability = R::number(f["current_stability"], "fit.current_stability");
        if (f["balance_tolerance"]) cfg.fit.balance_tolerance = R::number(f["balance_tolerance"], "fit.balance_tolerance");
        if (f["min_samples"]) cfg.fit.min_samples = static_cast<std::size_t>(R::integer(f["min_samples"], "fit.min_samples"));
    }

    if (const auto s = root["sweep"]) {
        if (!s.IsSequence()) throw ParseError("config: sweep must be a list of axes", detail::line_of(s), "sweep");
        for (std::size_t k = 0; k < s.size(); ++k) {
            const std::string field = "sweep[" + std::to_string(k) + "]";
            R::require_map(s[k], field);
            if (!s[k]["parameter"]) throw ParseError("config: " + field + ".parameter is required", detail::line_of(s[k]), field);
            const auto name = R::scalar<std::string>(s[k]["parameter"], field + ".parameter");
            if (name != "beta_h" && name != "g" && name != "delta" && name != "n0" && name != "omega_e") {
                throw ParseError("config: unknown sweep parameter " + name, detail::line_of(s[k]["parameter"]),
                                 field + ".parameter");
            }
            cfg.sweep.push_back({name, detail::parse_axis_values(s[k], field)});
        }
    }

    if (const auto s = root["suite"]) {
        R::check_keys(s, "suite", {"detuning_g", "detuning_span", "offset_kinds", "weak"});
        if (s["detuning_g"]) cfg.suite.detuning_g = R::number_list(s["detuning_g"], "suite.detuning_g");
        if (s["detuning_span"]) cfg.suite.detuning_span = R::number_list(s["detuning_span"], "suite.detuning_span");
        if (const auto k = s["offset_kinds"]) {
            if (!k.IsSequence()) throw ParseError("config: suite.offset_kinds must be a list", detail::line_of(k), "suite.offset_kinds");
            for (std::size_t j = 0; j < k.size(); ++j) {
                const auto kind = detail::parse_load_kind(k[j], "suite.offset_kinds[" + std::to_string(j) + "]");
                if (kind == LoadKind::OffsetHarmonic) {
                    throw ParseError("config: offset kinds are harmonic or ladder", detail::line_of(k[j]), "suite.offset_kinds");
                }
                cfg.suite.offset_kinds.push_back(kind);
            }
        }
        if (const auto w = s["weak"]) {
            R::check_keys(w, "suite.weak", {"g_values", "curve_beta_h", "curve_t_final", "curve_sample_dt"});
            if (w["g_values"]) cfg.suite.weak.g_values = R::number_list(w["g_values"], "suite.weak.g_values");
            if (w["curve_beta_h"]) cfg.suite.weak.curve_beta_h = R::number_list(w["curve_beta_h"], "suite.weak.curve_beta_h");
            if (w["curve_t_final"]) cfg.suite.weak.curve_t_final = R::number(w["curve_t_final"], "suite.weak.curve_t_final");
            if (w["curve_sample_dt"]) cfg.suite.weak.curve_sample_dt = R::number(w["curve_sample_dt"], "suite.weak.curve_sample_dt");
        }
    }

    if (root["output_dir"]) cfg.output_dir = R::scalar<std::string>(root["output_dir"], "output_dir");
    if (root["workers"]) {
        const Index w = R::integer(root["workers"], "workers");
        if (w < 1) throw ValidationError("workers must be a positive integer");
        cfg.workers = static_cast<int>(w);
    }

    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// Fully resolved configuration. Execution settings (output_dir, workers) are
// left out unless asked for, so files written from the same physics are
// identical however the run was scheduled.
inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c, bool include_execution = false) {
    using J = nlohmann::ordered_json;
    J j;
    j["units"] = "hbar = omega_c = 1";
    j["machine"] = {{"omega_c", c.machine.omega_c}, {"omega_e", c.machine.omega_e}};
    j["load"] = {{"kind", std::string(to_string(c.load.kind))},
                 {"omega_l", c.omega_l()},
                 {"delta", c.detuning()},
                 {"offset", c.load.offset},
                 {"n_fock", c.load.n_fock},
                 {"initial_level", c.load.initial_level}};
    j["coupling"] = {{"g", c.coupling.g}, {"form", std::string(to_string(c.coupling.form))}};
    j["baths"] = {{"hot", {{"eta", c.hot.eta}, {"cutoff", c.hot.cutoff}, {"beta", c.hot.beta}}},
                  {"cold", {{"eta", c.cold.eta}, {"cutoff", c.cold.cutoff}, {"beta", c.cold.beta}}}};
    j["generator"] = {{"kind", std::string(to_string(c.generator))}, {"bin_tol", c.bin_tol}, {"gamma0", c.gamma0}};
    j["integrator"] = {{"tol", c.integrator.tol}, {"t_final", c.integrator.t_final}, {"sample_dt", c.integrator.sample_dt}};
    j["fit"] = {{"dead_band", c.fit.dead_band},
                {"slope_stability", c.fit.slope_stability},
                {"current_stability", c.fit.current_stability},
                {"balance_tolerance", c.fit.balance_tolerance},
                {"min_samples", c.fit.min_samples}};
    J axes = J::array();
    for (const auto& a : c.sweep) axes.push_back({{"parameter", a.parameter}, {"values", a.values}});
    j["sweep"] = axes;
    J kinds = J::array();
    for (auto k : c.suite.offset_kinds) kinds.push_back(std::string(to_string(k)));
    j["suite"] = {{"detuning_g", c.suite.detuning_g},
                  {"detuning_span", c.suite.detuning_span},
                  {"offset_kinds", kinds},
                  {"weak",
                   {{"g_values", c.suite.weak.g_values},
                    {"curve_beta_h", c.suite.weak.curve_beta_h},
                    {"curve_t_final", c.suite.weak.curve_t_final},
                    {"curve_sample_dt", c.suite.weak.curve_sample_dt}}}};
    if (include_execution) {
        j["output_dir"] = c.output_dir;
        j["workers"] = c.workers;
    }
    return j;
}

}  // namespace qtm
