// diffusion.hpp — drift/diffusion fits, regime labels, and biased-diffusion closed forms
//
// Convention: D = (1/2) d sigma^2/dt, so the Gaussian solution has variance 2 D t.
// The raw variance slope is kept alongside D in fits.

#pragma once

#include "qtm/errors.hpp"
#include "qtm/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtm {

// ---------------------------------------------------------------------------
// Linear least squares

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("linear_fit: need >= 2 paired samples");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = x[k] - mx;
        const double dy = y[k] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw ValidationError("linear_fit: abscissae are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = y[k] - (f.intercept + f.slope * x[k]);
        ss_res += r * r;
    }
    f.r2 = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    return f;
}

// ---------------------------------------------------------------------------
// Drift/diffusion extraction

struct FitOptions {
    std::size_t min_samples = 50;
    double slope_stability = 0.05;  // relative agreement of the two half-window slopes
    // Absolute floor on the slope mismatch, as a fraction of the variance slope;
    // keeps the rule usable where v passes through zero.
    double stability_floor = 1e-3;
    // The half-window mean heat currents must agree to this fraction of the
    // energy throughput max(|Qdot_h|, |Qdot_c|, |P_l|). Against the throughput,
    // not each current: with a harmonic load g*sqrt(n) drifts with mu, so a
    // small current keeps drifting in relative terms long after the transient.
    double current_stability = 0.05;
    // The machine must be stationary: window mean Qdot_h + Qdot_c equals P_l to
    // this fraction of the throughput.
    double balance_tolerance = 0.01;
};

struct DriftDiffusionFit {
    double v = 0.0;
    double D = 0.0;
    double sigma2_slope = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t first_sample = 0;
    std::size_t n_samples = 0;
    double r2_mu = 1.0;
    double r2_sigma = 1.0;
    bool converged = true;
    // quasi-steady energetics over the same window
    double p_load = 0.0;     // slope of E_load
    double qdot_hot = 0.0;   // window average
    double qdot_cold = 0.0;  // window average
};

// Raised when no stationary window is found; carries the best-effort fit
// over the second half of the series.
class TransientNotConverged : public Error {
public:
    TransientNotConverged(const std::string& what, DriftDiffusionFit fit) : Error(what), fit_(fit) {}
    const DriftDiffusionFit& fit() const noexcept { return fit_; }

private:
    DriftDiffusionFit fit_;
};

namespace detail {

inline DriftDiffusionFit fit_window(const ObservableSeries& s, std::size_t first) {
    const std::span<const double> t(s.times.data() + first, s.size() - first);
    const auto mu = linear_fit(t, {s.mu.data() + first, t.size()});
    const auto var = linear_fit(t, {s.sigma2.data() + first, t.size()});
    const auto energy = linear_fit(t, {s.energy_load.data() + first, t.size()});
    DriftDiffusionFit f;
    f.v = mu.slope;
    f.sigma2_slope = var.slope;
    f.D = std::max(0.0, 0.5 * var.slope);
    f.r2_mu = mu.r2;
    f.r2_sigma = var.r2;
    f.first_sample = first;
    f.n_samples = t.size();
    f.t_start = t.front();
    f.t_end = t.back();
    f.p_load = energy.slope;
    double qh = 0.0;
    double qc = 0.0;
    for (std::size_t k = first; k < s.size(); ++k) {
        qh += s.qdot_hot[k];
        qc += s.qdot_cold[k];
    }
    f.qdot_hot = qh / static_cast<double>(t.size());
    f.qdot_cold = qc / static_cast<double>(t.size());
    return f;
}

inline double slope_of(const ObservableSeries& s, const std::vector<double>& y, std::size_t a, std::size_t b) {
    return linear_fit({s.times.data() + a, b - a}, {y.data() + a, b - a}).slope;
}

inline double mean_of(const std::vector<double>& y, std::size_t a, std::size_t b) {
    double m = 0.0;
    for (std::size_t k = a; k < b; ++k) m += y[k];
    return m / static_cast<double>(b - a);
}

inline bool agree(double a, double b, double rel, double floor) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + floor;
}

}  // namespace detail

// Fits mu(t) and sigma^2(t) over the post-transient window. The window starts
// at the earliest sample after which the mu-slopes of the two half-windows
// agree within slope_stability and the half-window mean heat currents agree
// within current_stability of the energy throughput, and on which the
// machine's energy balance Qdot_h + Qdot_c = P_l closes within balance_tolerance.
inline DriftDiffusionFit fit_drift_diffusion(const ObservableSeries& s, const FitOptions& opt = {}) {
    const std::size_t n = s.size();
    const std::size_t min_len = std::max<std::size_t>(opt.min_samples, 4);
    if (n < min_len) {
        throw ValidationError("fit_drift_diffusion: series has " + std::to_string(n) + " samples, need " +
                              std::to_string(min_len));
    }
    for (std::size_t first = 0; first + min_len <= n; ++first) {
        const std::size_t mid = first + (n - first) / 2;
        const double s1 = detail::slope_of(s, s.mu, first, mid + 1);
        const double s2 = detail::slope_of(s, s.mu, mid, n);
        const double var = std::abs(detail::slope_of(s, s.sigma2, first, n));
        if (!detail::agree(s1, s2, opt.slope_stability, opt.stability_floor * var)) continue;
        // the heat currents averaged over the window must be stationary as well
        const double h1 = detail::mean_of(s.qdot_hot, first, mid + 1);
        const double h2 = detail::mean_of(s.qdot_hot, mid, n);
        const double c1 = detail::mean_of(s.qdot_cold, first, mid + 1);
        const double c2 = detail::mean_of(s.qdot_cold, mid, n);
        const double p = std::abs(detail::slope_of(s, s.energy_load, first, n));
        const double q = detail::mean_of(s.qdot_hot, first, n) + detail::mean_of(s.qdot_cold, first, n);
        const double flow = std::max({std::abs(h1), std::abs(h2), std::abs(c1), std::abs(c2), p});
        const double scale = opt.current_stability * flow;
        if (detail::agree(h1, h2, 0.0, scale) && detail::agree(c1, c2, 0.0, scale) &&
            std::abs(q - detail::slope_of(s, s.energy_load, first, n)) <= opt.balance_tolerance * flow) {
            return detail::fit_window(s, first);
        }
    }
    DriftDiffusionFit f = detail::fit_window(s, std::min(n / 2, n - min_len));
    f.converged = false;
    throw TransientNotConverged("fit_drift_diffusion: drift or heat currents never became stationary", f);
}

// Returns the best-effort fit instead of throwing; converged reports the outcome.
inline DriftDiffusionFit fit_drift_diffusion_lenient(const ObservableSeries& s, const FitOptions& opt = {}) {
    try {
        return fit_drift_diffusion(s, opt);
    } catch (const TransientNotConverged& e) {
        return e.fit();
    }
}

// r_± = D ± v/2
inline double rate_up(const DriftDiffusionFit& f) { return f.D + 0.5 * f.v; }
inline double rate_down(const DriftDiffusionFit& f) { return f.D - 0.5 * f.v; }

// ---------------------------------------------------------------------------
// Functioning regimes

enum class RegimeLabel { Engine, Accelerator, Heater, Refrigerator, Indeterminate };

inline std::string_view to_string(RegimeLabel r) {
    switch (r) {
        case RegimeLabel::Engine: return "Engine";
        case RegimeLabel::Accelerator: return "Accelerator";
        case RegimeLabel::Heater: return "Heater";
        case RegimeLabel::Refrigerator: return "Refrigerator";
        case RegimeLabel::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

inline constexpr double kDefaultDeadBand = 1e-3;

struct RegimeClassification {
    RegimeLabel label = RegimeLabel::Indeterminate;
    std::string diagnostic;  // set when Indeterminate
};

// Signs are for energy flowing into machine+load (heat) and into the load (power).
inline RegimeClassification classify_regime_detailed(double qdot_h, double qdot_c, double p_l,
                                                     double dead_band = kDefaultDeadBand) {
    const double scale = std::max({std::abs(qdot_h), std::abs(qdot_c), std::abs(p_l)});
    const double floor = dead_band * scale;
    if (scale == 0.0 || std::abs(qdot_h) < floor || std::abs(qdot_c) < floor || std::abs(p_l) < floor) {
        return {RegimeLabel::Indeterminate, "value inside dead band"};
    }
    const bool h = qdot_h > 0.0;
    const bool c = qdot_c > 0.0;
    const bool p = p_l > 0.0;
    if (h && !c && p) return {RegimeLabel::Engine, {}};
    if (h && !c && !p) return {RegimeLabel::Accelerator, {}};
    if (!h && !c && !p) return {RegimeLabel::Heater, {}};
    if (!h && c && !p) return {RegimeLabel::Refrigerator, {}};
    return {RegimeLabel::Indeterminate, std::string("unlabelled sign pattern (") + (h ? '+' : '-') + ',' +
                                            (c ? '+' : '-') + ',' + (p ? '+' : '-') + ")"};
}

inline RegimeLabel classify_regime(double qdot_h, double qdot_c, double p_l, double dead_band = kDefaultDeadBand) {
    return classify_regime_detailed(qdot_h, qdot_c, p_l, dead_band).label;
}

// ---------------------------------------------------------------------------
// Biased diffusion closed forms

namespace detail {
inline void require_positive_time(double t, const char* where) {
    if (!(t > 0.0)) throw NonpositiveTime(std::string(where) + ": t must be > 0");
}
}  // namespace detail

// Solution of dp/dt = D d2p/dn2 - v dp/dn localised at n0 at t = 0.
inline double gaussian_solution(double n, double t, double v, double D, double n0) {
    detail::require_positive_time(t, "gaussian_solution");
    if (!(D > 0.0)) throw ValidationError("gaussian_solution: D must be > 0");
    const double x = n - v * t - n0;
    return std::exp(-x * x / (4.0 * D * t)) / std::sqrt(4.0 * std::numbers::pi * D * t);
}

// omega_l (mu + 1/2), mu = v t + n0
inline double analytic_energy(double t, double v, double D, double n0, double omega_l) {
    (void)D;
    return omega_l * (v * t + n0 + 0.5);
}

// Energy of the Gaussian restricted to n >= 0, boundary terms retained:
//   omega_l [mu P + sqrt(D t / pi) e^{-mu^2/4Dt} + P/2],  P = (1 + erf(mu / 2 sqrt(D t)))/2
inline double analytic_energy_erf(double t, double v, double D, double n0, double omega_l) {
    detail::require_positive_time(t, "analytic_energy_erf");
    const double mu = v * t + n0;
    const double w = std::sqrt(D * t);
    const double mass = 0.5 * (1.0 + std::erf(mu / (2.0 * w)));
    return omega_l * (mu * mass + w / std::sqrt(std::numbers::pi) * std::exp(-mu * mu / (4.0 * w * w)) + 0.5 * mass);
}

inline double analytic_entropy(double t, double D) {
    detail::require_positive_time(t, "analytic_entropy");
    if (!(D > 0.0)) throw ValidationError("analytic_entropy: D must be > 0");
    return 0.5 * (1.0 + std::log(4.0 * std::numbers::pi * D * t));
}

inline double analytic_passive_energy(double t, double D, double omega_l) {
    if (t < 0.0) throw NonpositiveTime("analytic_passive_energy: t must be >= 0");
    return omega_l * (std::sqrt(8.0 * D * t / std::numbers::pi) + 0.5);
}

inline double analytic_ergotropy(double t, double v, double D, double n0, double omega_l) {
    return analytic_energy(t, v, D, n0, omega_l) - analytic_passive_energy(t, D, omega_l);
}

inline double analytic_ergotropy_rate(double t, double v, double D, double omega_l) {
    detail::require_positive_time(t, "analytic_ergotropy_rate");
    return omega_l * (v - std::sqrt(2.0 * D / (std::numbers::pi * t)));
}

// beta_h at which beta_c omega_c = beta_h omega_h
inline double scovil_schulz_boundary(double omega_c, double omega_h, double beta_c) {
    if (!(omega_h > 0.0)) throw NonPositiveFrequency("scovil_schulz_boundary: omega_h must be > 0");
    return beta_c * omega_c / omega_h;
}

struct Efficiencies {
    double engine = 0.0;
    double carnot = 0.0;
};

inline Efficiencies efficiencies(double omega_c, double omega_e, double beta_h, double beta_c) {
    if (!(beta_c > 0.0)) throw ValidationError("efficiencies: beta_c must be > 0");
    return {omega_e / (omega_c + omega_e), 1.0 - beta_h / beta_c};
}

}  // namespace qtm
