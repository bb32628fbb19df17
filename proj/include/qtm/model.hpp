// model.hpp — three-level machine, quantized load, coupling, and Ohmic baths
//
// Units: hbar = 1 and omega_c = 1. Frequencies are in omega_c, energies in
// hbar*omega_c, inverse temperatures in (hbar*omega_c)^-1.

#pragma once

#include "qtm/errors.hpp"
#include "qtm/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

namespace qtm {

inline constexpr Index kMachineDim = 3;

// Machine levels are numbered 1..3 in the physics; indices here are 0..2.
enum class Level : Index { One = 0, Two = 1, Three = 2 };

struct MachineSpec {
    double omega_c = 1.0;
    double omega_e = 3.0;

    double omega_h() const noexcept { return omega_c + omega_e; }
    std::array<double, 3> energies() const noexcept { return {0.0, omega_c, omega_h()}; }

    void validate() const {
        if (!(omega_c > 0.0)) throw ValidationError("machine.omega_c must be > 0");
        if (!(omega_e > 0.0)) throw ValidationError("machine.omega_e must be > 0");
    }
};

enum class LoadKind { Harmonic, Ladder, OffsetHarmonic };

inline std::string_view to_string(LoadKind k) {
    switch (k) {
        case LoadKind::Harmonic: return "harmonic";
        case LoadKind::Ladder: return "ladder";
        case LoadKind::OffsetHarmonic: return "offset_harmonic";
    }
    return "?";
}

// Width of the monitored top band of Fock levels: the top 10%, at least one level.
inline Index truncation_band(Index n_fock) {
    return std::max<Index>(1, static_cast<Index>(std::ceil(0.1 * static_cast<double>(n_fock))));
}

// Default truncation: occupancy headroom of 4x the initial level, at least 40.
inline Index default_fock_dimension(Index initial_level) {
    return std::max<Index>(40, 4 * initial_level);
}

struct LoadSpec {
    LoadKind kind = LoadKind::Harmonic;
    Index offset = 0;  // n0, used by OffsetHarmonic only
    double omega_l = 3.0;
    Index n_fock = 80;
    Index initial_level = 20;

    void validate() const {
        if (n_fock < 2) throw ValidationError("load.n_fock must be >= 2");
        if (!(omega_l > 0.0)) throw ValidationError("load.omega_l must be > 0");
        if (offset < 0) throw ValidationError("load.offset must be >= 0");
        if (offset != 0 && kind != LoadKind::OffsetHarmonic) {
            throw ValidationError("load.offset is only meaningful for offset_harmonic loads");
        }
        if (initial_level < 0 || initial_level >= n_fock - truncation_band(n_fock)) {
            throw ValidationError("load.initial_level " + std::to_string(initial_level) +
                                  " must lie below the monitored top band of n_fock = " +
                                  std::to_string(n_fock));
        }
    }
};

// omega_l = omega_e + delta
inline double load_frequency_from_detuning(const MachineSpec& m, double delta) {
    return m.omega_e + delta;
}

enum class BathLabel { Hot, Cold };

inline std::string_view to_string(BathLabel b) { return b == BathLabel::Hot ? "hot" : "cold"; }

struct BathSpec {
    double eta = 0.005;
    double cutoff = 1.0;
    double beta = 1.0;
    BathLabel label = BathLabel::Hot;

    void validate() const {
        if (!(eta > 0.0)) throw ValidationError("bath.eta must be > 0");
        if (!(cutoff > 0.0)) throw ValidationError("bath.cutoff must be > 0");
        if (!(beta > 0.0)) throw ValidationError("bath.beta must be > 0");
    }
};

enum class CouplingForm { Full, RWA };

inline std::string_view to_string(CouplingForm f) { return f == CouplingForm::Full ? "full" : "rwa"; }

struct CouplingSpec {
    double g = 0.05;
    CouplingForm form = CouplingForm::Full;

    void validate() const {
        if (!(g >= 0.0)) throw ValidationError("coupling.g must be >= 0");
    }
};

struct LoadOperators {
    OperatorMatrix lower;
    OperatorMatrix raise;
    OperatorMatrix number;
};

inline OperatorMatrix build_machine_hamiltonian(const MachineSpec& m) {
    const auto e = m.energies();
    return OperatorMatrix::diagonal(e, "machine");
}

inline LoadOperators build_load_operators(const LoadSpec& l) {
    if (l.n_fock < 2) throw ValidationError("build_load_operators: n_fock must be >= 2");
    const Index n = l.n_fock;
    Matrix lower = Matrix::Zero(n, n);
    Matrix number = Matrix::Zero(n, n);
    for (Index k = 0; k < n; ++k) {
        number(k, k) = static_cast<double>(k);
        if (k == 0) continue;
        double amp = 1.0;
        switch (l.kind) {
            case LoadKind::Harmonic: amp = std::sqrt(static_cast<double>(k)); break;
            case LoadKind::OffsetHarmonic: amp = std::sqrt(static_cast<double>(k + l.offset)); break;
            case LoadKind::Ladder: amp = 1.0; break;
        }
        lower(k - 1, k) = amp;
    }
    OperatorMatrix low(std::move(lower), "fock");
    OperatorMatrix up = low.adjoint();
    return {std::move(low), std::move(up), OperatorMatrix(std::move(number), "fock")};
}

// hbar*omega_l (n + 1/2) on the truncated Fock space
inline OperatorMatrix build_load_hamiltonian(const LoadSpec& l) {
    Matrix h = Matrix::Zero(l.n_fock, l.n_fock);
    for (Index k = 0; k < l.n_fock; ++k) h(k, k) = l.omega_l * (static_cast<double>(k) + 0.5);
    return OperatorMatrix(std::move(h), "fock");
}

inline OperatorMatrix build_interaction(const CouplingSpec& c, const LoadSpec& l) {
    const auto ops = build_load_operators(l);
    const auto s23 = OperatorMatrix::basis_op(kMachineDim, 1, 2, "machine");  // |2><3|
    const auto s32 = OperatorMatrix::basis_op(kMachineDim, 2, 1, "machine");  // |3><2|
    if (c.form == CouplingForm::Full) {
        return Complex(c.g) * kron(s23 + s32, ops.lower + ops.raise);
    }
    // energy-conserving pair: 3 -> 2 emits into the load, 2 -> 3 absorbs from it
    return Complex(c.g) * (kron(s23, ops.raise) + kron(s32, ops.lower));
}

inline OperatorMatrix build_total_hamiltonian(const MachineSpec& m, const LoadSpec& l, const CouplingSpec& c) {
    const auto hm = build_machine_hamiltonian(m);
    const auto hl = build_load_hamiltonian(l);
    const auto hi = build_interaction(c, l);
    if (hi.dim() != hm.dim() * hl.dim()) {
        throw DimensionMismatch("build_total_hamiltonian: interaction dimension mismatch");
    }
    const auto id_m = OperatorMatrix::identity(kMachineDim);
    const auto id_l = OperatorMatrix::identity(l.n_fock);
    OperatorMatrix h(kron(hm, id_l).entries() + kron(id_m, hl).entries() + hi.entries(), "machine⊗fock");
    return h;
}

// Machine-side bath coupling operators A_h = |1><3| + h.c. and A_c = |1><2| + h.c.
inline OperatorMatrix machine_bath_coupling(BathLabel b) {
    const Index upper = b == BathLabel::Hot ? 2 : 1;
    return OperatorMatrix::basis_op(kMachineDim, 0, upper, "machine") +
           OperatorMatrix::basis_op(kMachineDim, upper, 0, "machine");
}

// A_j ⊗ I_load on the composite space
inline OperatorMatrix bath_coupling_operator(BathLabel b, Index n_fock) {
    return kron(machine_bath_coupling(b), OperatorMatrix::identity(n_fock, "fock"));
}

// Bose-Einstein occupation (e^{beta omega} - 1)^-1
inline double bose_occupation(double omega, double beta) {
    if (!(omega > 0.0)) throw NonPositiveFrequency("bose_occupation: omega must be > 0");
    if (!(beta > 0.0)) throw ValidationError("bose_occupation: beta must be > 0");
    return 1.0 / std::expm1(beta * omega);
}

// Ohmic spectral function with exponential cutoff,
//   gamma(w) = 2 pi eta w e^{-|w|/wc} / (1 - e^{-beta w}),
// continuous at w = 0 where it equals 2 pi eta / beta. Positive w is
// emission into the bath.
inline double bath_rate(double omega, const BathSpec& b) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (omega == 0.0) return two_pi * b.eta / b.beta;
    const double x = b.beta * omega;
    return two_pi * b.eta * std::exp(-std::abs(omega) / b.cutoff) * omega / (-std::expm1(-x));
}

}  // namespace qtm
