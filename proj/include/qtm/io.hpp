// io.hpp — CSV and JSON persistence for series and sweep results
//
// Every file opens with provenance: CSVs carry '#'-prefixed comment lines
// (schema, code version, units, resolved config as one-line JSON) ahead of
// the header row; JSON files carry the same fields as keys. Numbers are
// written in shortest round-trip form so files are byte-reproducible.

#pragma once

#include "qtm/config.hpp"
#include "qtm/errors.hpp"
#include "qtm/evolve.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace qtm {

namespace io {

// Shortest round-trip decimal; non-finite values become an empty field.
inline std::string num(double x) {
    if (!std::isfinite(x)) return {};
    if (x == 0.0) return "0";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline void join_row(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k) out += ',';
        out += fields[k];
    }
    out += '\n';
}

// CSV text field: double quotes doubled, newlines flattened
inline std::string quoted(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch == '\n' ? ' ' : ch;
    }
    return q + "\"";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

inline std::string provenance_lines(std::string_view kind, const nlohmann::ordered_json& config) {
    std::string s;
    s += "# qtm ";
    s += kind;
    s += " schema=" + std::to_string(kSchemaVersion) + " version=" + kVersion + '\n';
    s += "# units: hbar = omega_c = 1\n";
    s += "# config: " + config.dump() + '\n';
    return s;
}

inline nlohmann::ordered_json provenance_json(std::string_view kind, const nlohmann::ordered_json& config) {
    nlohmann::ordered_json j;
    j["schema"] = std::string(kind);
    j["schema_version"] = kSchemaVersion;
    j["version"] = kVersion;
    j["units"] = "hbar = omega_c = 1";
    j["config"] = config;
    return j;
}

}  // namespace io

inline const std::vector<std::string>& series_columns() {
    static const std::vector<std::string> cols{"t",      "mu",     "sigma2", "E_load", "S_load",
                                               "W_load", "Qdot_h", "Qdot_c", "E_total"};
    return cols;
}

inline std::string series_csv(const ObservableSeries& s, const nlohmann::ordered_json& config) {
    std::string out = io::provenance_lines("series", config);
    io::join_row(out, series_columns());
    for (std::size_t k = 0; k < s.size(); ++k) {
        io::join_row(out, {io::num(s.times[k]), io::num(s.mu[k]), io::num(s.sigma2[k]), io::num(s.energy_load[k]),
                           io::num(s.entropy_load[k]), io::num(s.ergotropy_load[k]), io::num(s.qdot_hot[k]),
                           io::num(s.qdot_cold[k]), io::num(s.energy_total[k])});
    }
    return out;
}

// Load populations p(n, t): one row per sample, columns t, p0 .. p{N-1}.
inline std::string populations_csv(const ObservableSeries& s, const nlohmann::ordered_json& config) {
    std::string out = io::provenance_lines("populations", config);
    std::vector<std::string> header{"t"};
    const std::size_t n = s.p_n.empty() ? 0 : s.p_n.front().size();
    for (std::size_t k = 0; k < n; ++k) header.push_back("p" + std::to_string(k));
    io::join_row(out, header);
    for (std::size_t k = 0; k < s.size(); ++k) {
        std::vector<std::string> row{io::num(s.times[k])};
        for (double p : s.p_n[k]) row.push_back(io::num(p));
        io::join_row(out, row);
    }
    return out;
}

inline nlohmann::ordered_json diagnostics_json(const IntegratorDiagnostics& d) {
    auto fin = [](double x) { return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr); };
    return {{"accepted_steps", d.accepted_steps},
            {"rejected_steps", d.rejected_steps},
            {"rhs_evaluations", d.rhs_evaluations},
            {"smallest_step", fin(d.smallest_step)},
            {"largest_step", fin(d.largest_step)},
            {"step_cap", fin(d.step_cap)},
            {"support_size", d.support_size},
            {"largest_block", d.largest_block},
            {"max_trace_error", fin(d.max_trace_error)},
            {"max_hermiticity_error", fin(d.max_hermiticity_error)},
            {"min_eigenvalue", fin(d.min_eigenvalue)},
            {"max_first_law_residual", fin(d.max_first_law_residual)},
            {"max_top_band_population", fin(d.max_top_band_population)}};
}

}  // namespace qtm
