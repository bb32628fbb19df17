// analytics.hpp — numeric load observables next to the biased-diffusion closed forms

#pragma once

#include "qtm/diffusion.hpp"
#include "qtm/evolve.hpp"
#include "qtm/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace qtm {

struct AnalyticsRow {
    double t;
    double energy, energy_theory, energy_erf_theory;
    double entropy, entropy_theory;
    double ergotropy, ergotropy_theory;
    // same passive-state construction with the doubled standard deviation (see README)
    double ergotropy_sorted_theory;
};

// Rows over the fit window, skipping t = 0 where the closed forms are singular.
inline std::vector<AnalyticsRow> analytics_table(const ObservableSeries& s, const DriftDiffusionFit& f, double n0) {
    std::vector<AnalyticsRow> rows;
    const double w = s.omega_l;
    for (std::size_t k = f.first_sample; k < s.size(); ++k) {
        const double t = s.times[k];
        if (!(t > 0.0)) continue;
        AnalyticsRow r{};
        r.t = t;
        r.energy = s.energy_load[k];
        r.energy_theory = analytic_energy(t, f.v, f.D, n0, w);
        r.energy_erf_theory = analytic_energy_erf(t, f.v, f.D, n0, w);
        r.entropy = s.entropy_load[k];
        r.entropy_theory = analytic_entropy(t, f.D);
        r.ergotropy = s.ergotropy_load[k];
        r.ergotropy_theory = analytic_ergotropy(t, f.v, f.D, n0, w);
        r.ergotropy_sorted_theory = r.energy_theory - w * (std::sqrt(16.0 * f.D * t / std::numbers::pi) + 0.5);
        rows.push_back(r);
    }
    return rows;
}

// Standard deviation of (numeric - theory) after removing the mean offset,
// relative to the range of the numeric curve.
inline double offset_residual(const std::vector<double>& numeric, const std::vector<double>& theory) {
    const std::size_t n = numeric.size();
    if (n == 0 || theory.size() != n) throw DimensionMismatch("offset_residual: length mismatch");
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += numeric[k] - theory[k];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = numeric[k] - theory[k] - mean;
        ss += e * e;
    }
    const auto [lo, hi] = std::minmax_element(numeric.begin(), numeric.end());
    const double range = *hi - *lo;
    const double sd = std::sqrt(ss / static_cast<double>(n));
    return range > 0.0 ? sd / range : (sd == 0.0 ? 0.0 : INFINITY);
}

struct OracleAgreement {
    double energy = NAN;
    double entropy = NAN;
    double ergotropy = NAN;
    double ergotropy_sorted = NAN;
};

inline OracleAgreement oracle_agreement(const std::vector<AnalyticsRow>& rows) {
    std::vector<double> e, et, s, st, w, wt, ws;
    for (const auto& r : rows) {
        e.push_back(r.energy);
        et.push_back(r.energy_theory);
        s.push_back(r.entropy);
        st.push_back(r.entropy_theory);
        w.push_back(r.ergotropy);
        wt.push_back(r.ergotropy_theory);
        ws.push_back(r.ergotropy_sorted_theory);
    }
    OracleAgreement a;
    if (rows.empty()) return a;
    a.energy = offset_residual(e, et);
    a.entropy = offset_residual(s, st);
    a.ergotropy = offset_residual(w, wt);
    a.ergotropy_sorted = offset_residual(w, ws);
    return a;
}

inline std::string analytics_csv(const std::vector<AnalyticsRow>& rows, const nlohmann::ordered_json& config) {
    std::string out = io::provenance_lines("analytics", config);
    io::join_row(out, {"t", "E_load", "E_theory", "E_erf_theory", "S_load", "S_theory", "W_load", "W_theory",
                       "W_sorted_theory"});
    for (const auto& r : rows) {
        io::join_row(out, {io::num(r.t), io::num(r.energy), io::num(r.energy_theory), io::num(r.energy_erf_theory),
                           io::num(r.entropy), io::num(r.entropy_theory), io::num(r.ergotropy),
                           io::num(r.ergotropy_theory), io::num(r.ergotropy_sorted_theory)});
    }
    return out;
}

}  // namespace qtm
