// master_eq.hpp — global (eigenbasis) and local GKSL generators, heat currents
//
// A Generator is stored in a working basis W in which the Hamiltonian is
//   H_w = diag(frame energies) + residual,
// with lab = U W U†. For the global generator W is the eigenbasis of the full
// Hamiltonian (residual empty); for the local generator W is the lab basis and
// the residual is the machine-load interaction. Jump operators are kept as
// sparse element lists in W. Nothing is ever assembled as a d^2 x d^2
// superoperator.

#pragma once

#include "qtm/errors.hpp"
#include "qtm/linalg.hpp"
#include "qtm/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace qtm {

enum class GeneratorKind { Global, Local };

inline std::string_view to_string(GeneratorKind k) { return k == GeneratorKind::Global ? "global" : "local"; }

inline constexpr double kDefaultBinTol = 1e-8;
inline constexpr double kDefaultGamma0 = 0.05;

// Eigenbasis elements smaller than this (relative to the largest) are dropped
// from the jump decomposition.
inline constexpr double kEntryDropTol = 1e-13;

// Nonzero element of an operator in the working basis. In the interaction
// picture of the frame energies it acquires the phase exp(-i offset t).
struct SparseEntry {
    Index row;
    Index col;
    Complex value;
    double offset;
};

struct JumpOperator {
    double bohr_frequency = 0.0;  // energy handed to the bath per jump
    BathLabel bath = BathLabel::Hot;
    double rate = 0.0;
    std::vector<SparseEntry> entries;          // working basis
    std::shared_ptr<const Matrix> basis;       // working -> lab; null means identity

    Index dim() const noexcept { return basis ? basis->rows() : 0; }

    // Working-basis dense form A(omega)
    Matrix working_matrix(Index dim) const {
        Matrix a = Matrix::Zero(dim, dim);
        for (const auto& e : entries) a(e.row, e.col) += e.value;
        return a;
    }

    // Lab-basis matrix A_j(omega)
    OperatorMatrix matrix() const {
        if (!basis) throw Error("JumpOperator::matrix: no basis attached");
        const Matrix a = working_matrix(basis->rows());
        return OperatorMatrix(*basis * a * basis->adjoint(), "machine⊗fock");
    }
};

namespace detail {

using EntryKey = std::pair<Index, Index>;

inline std::vector<SparseEntry> to_entries(const std::map<EntryKey, Complex>& acc, const RealVector& frame) {
    std::vector<SparseEntry> out;
    out.reserve(acc.size());
    for (const auto& [key, v] : acc) {
        if (v == Complex(0.0)) continue;
        out.push_back({key.first, key.second, v, frame(key.second) - frame(key.first)});
    }
    return out;
}

// B = sum over jumps of rate * A† A, restricted to element pairs that share a row.
inline std::vector<SparseEntry> decay_operator(const std::vector<JumpOperator>& jumps, BathLabel bath,
                                               const RealVector& frame) {
    std::map<EntryKey, Complex> acc;
    for (const auto& j : jumps) {
        if (j.bath != bath || j.rate == 0.0) continue;
        std::map<Index, std::vector<const SparseEntry*>> by_row;
        for (const auto& e : j.entries) by_row[e.row].push_back(&e);
        for (const auto& [row, list] : by_row) {
            for (const auto* e : list) {
                for (const auto* f : list) {
                    acc[{e->col, f->col}] += j.rate * std::conj(e->value) * f->value;
                }
            }
        }
    }
    return to_entries(acc, frame);
}

inline void add_left_product(const std::vector<SparseEntry>& op, Complex scale, const Matrix& rho, Matrix& out) {
    // out += scale * Op * rho
    for (const auto& e : op) out.row(e.row) += (scale * e.value) * rho.row(e.col);
}

inline void add_right_product(const std::vector<SparseEntry>& op, Complex scale, const Matrix& rho, Matrix& out) {
    // out += scale * rho * Op
    for (const auto& e : op) out.col(e.col) += (scale * e.value) * rho.col(e.row);
}

// out += rate * A rho A† for one sparse jump operator
inline void add_jump_sandwich(const JumpOperator& j, const Matrix& rho, Matrix& out) {
    for (const auto& e : j.entries) {
        const Complex ae = j.rate * e.value;
        for (const auto& f : j.entries) {
            out(e.row, f.row) += ae * std::conj(f.value) * rho(e.col, f.col);
        }
    }
}

}  // namespace detail

class Generator {
public:
    Generator(GeneratorKind kind, OperatorMatrix hamiltonian, std::shared_ptr<const Matrix> basis,
              RealVector frame_energies, std::vector<SparseEntry> residual, std::vector<JumpOperator> jumps,
              Index load_dim)
        : kind_(kind),
          hamiltonian_(std::move(hamiltonian)),
          basis_(std::move(basis)),
          frame_(std::move(frame_energies)),
          residual_(std::move(residual)),
          jumps_(std::move(jumps)),
          load_dim_(load_dim) {
        if (!basis_ || basis_->rows() != hamiltonian_.dim() || frame_.size() != hamiltonian_.dim()) {
            throw DimensionMismatch("Generator: inconsistent basis dimensions");
        }
        decay_hot_ = detail::decay_operator(jumps_, BathLabel::Hot, frame_);
        decay_cold_ = detail::decay_operator(jumps_, BathLabel::Cold, frame_);
    }

    GeneratorKind kind() const noexcept { return kind_; }
    Index dim() const noexcept { return hamiltonian_.dim(); }
    Index load_dim() const noexcept { return load_dim_; }
    Index machine_dim() const noexcept { return dim() / load_dim_; }

    const OperatorMatrix& hamiltonian() const noexcept { return hamiltonian_; }
    const std::vector<JumpOperator>& jumps() const noexcept { return jumps_; }
    const Matrix& basis() const noexcept { return *basis_; }
    const RealVector& frame_energies() const noexcept { return frame_; }
    const std::vector<SparseEntry>& residual() const noexcept { return residual_; }
    const std::vector<SparseEntry>& decay_operator(BathLabel b) const noexcept {
        return b == BathLabel::Hot ? decay_hot_ : decay_cold_;
    }

    Matrix to_working(const Matrix& lab) const { return basis_->adjoint() * lab * *basis_; }
    Matrix to_lab(const Matrix& w) const { return *basis_ * w * basis_->adjoint(); }

    // Working-basis Hamiltonian as a dense matrix
    Matrix working_hamiltonian() const {
        Matrix h = Matrix::Zero(dim(), dim());
        for (Index k = 0; k < dim(); ++k) h(k, k) = frame_(k);
        for (const auto& e : residual_) h(e.row, e.col) += e.value;
        return h;
    }

    // Tr(H_w X) for a working-basis matrix X
    double energy_trace(const Matrix& x) const {
        Complex acc = 0.0;
        for (Index k = 0; k < dim(); ++k) acc += frame_(k) * x(k, k);
        for (const auto& e : residual_) acc += e.value * x(e.col, e.row);
        return acc.real();
    }

    // Sum of one bath's dissipators on a working-basis state (Schrödinger picture).
    Matrix bath_dissipator_working(BathLabel bath, const Matrix& rho_w) const {
        Matrix out = Matrix::Zero(dim(), dim());
        for (const auto& j : jumps_) {
            if (j.bath == bath && j.rate != 0.0) detail::add_jump_sandwich(j, rho_w, out);
        }
        const auto& b = decay_operator(bath);
        detail::add_left_product(b, -0.5, rho_w, out);
        detail::add_right_product(b, -0.5, rho_w, out);
        return out;
    }

    // Full generator on a working-basis state (Schrödinger picture):
    //   -i[H_w, rho] + sum_baths D_bath(rho)
    Matrix apply_working(const Matrix& rho_w) const {
        Matrix out = bath_dissipator_working(BathLabel::Hot, rho_w) + bath_dissipator_working(BathLabel::Cold, rho_w);
        for (Index i = 0; i < dim(); ++i) {
            for (Index k = 0; k < dim(); ++k) out(i, k) += -kI * (frame_(i) - frame_(k)) * rho_w(i, k);
        }
        detail::add_left_product(residual_, -kI, rho_w, out);
        detail::add_right_product(residual_, kI, rho_w, out);
        return out;
    }

private:
    GeneratorKind kind_;
    OperatorMatrix hamiltonian_;
    std::shared_ptr<const Matrix> basis_;
    RealVector frame_;
    std::vector<SparseEntry> residual_;
    std::vector<JumpOperator> jumps_;
    std::vector<SparseEntry> decay_hot_;
    std::vector<SparseEntry> decay_cold_;
    Index load_dim_;
};

// Split A into its Bohr-frequency components in the eigenbasis of the total
// Hamiltonian: A(w) = sum_{e' - e = w} Pi(e) A Pi(e'). Frequencies are
// grouped by single linkage at bin_tol; a group whose spread reaches bin_tol
// is reported as AmbiguousBinning rather than merged silently.
inline std::vector<JumpOperator> decompose_jump_operators(const OperatorMatrix& a, const HermitianEigen& eig,
                                                          const BathSpec& bath, double bin_tol = kDefaultBinTol,
                                                          std::shared_ptr<const Matrix> basis = nullptr) {
    if (a.dim() != eig.dim()) throw DimensionMismatch("decompose_jump_operators: dimension mismatch");
    if (!a.is_hermitian()) throw NotHermitian("decompose_jump_operators: coupling operator must be Hermitian");
    if (!(bin_tol > 0.0)) throw ValidationError("decompose_jump_operators: bin_tol must be > 0");
    if (!basis) basis = std::make_shared<const Matrix>(eig.eigenvectors);

    const Matrix aw = eig.to_eigen(a.entries());
    const Index d = aw.rows();
    const double scale = aw.cwiseAbs().maxCoeff();
    struct Raw {
        double w;
        Index r, c;
        Complex v;
    };
    std::vector<Raw> raw;
    for (Index c = 0; c < d; ++c) {
        for (Index r = 0; r < d; ++r) {
            if (std::abs(aw(r, c)) <= kEntryDropTol * scale) continue;
            raw.push_back({eig.eigenvalues(c) - eig.eigenvalues(r), r, c, aw(r, c)});
        }
    }
    std::stable_sort(raw.begin(), raw.end(), [](const Raw& x, const Raw& y) { return x.w < y.w; });

    std::vector<JumpOperator> out;
    std::size_t begin = 0;
    while (begin < raw.size()) {
        std::size_t end = begin + 1;
        double widest_gap = 0.0;
        while (end < raw.size() && raw[end].w - raw[end - 1].w < bin_tol) {
            widest_gap = std::max(widest_gap, raw[end].w - raw[end - 1].w);
            ++end;
        }
        const double lo = raw[begin].w;
        const double hi = raw[end - 1].w;
        if (hi - lo >= bin_tol) {
            throw AmbiguousBinning("decompose_jump_operators: Bohr frequencies near " + fmt_num(lo) +
                                       " chain over a span of " + fmt_num(hi - lo) +
                                       " with internal gaps up to " + fmt_num(widest_gap) +
                                       " (bin_tol " + fmt_num(bin_tol) + ")",
                                   hi - lo, widest_gap);
        }
        JumpOperator j;
        j.bohr_frequency = 0.5 * (lo + hi);
        j.bath = bath.label;
        j.rate = bath_rate(j.bohr_frequency, bath);
        j.basis = basis;
        j.entries.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) {
            j.entries.push_back({raw[k].r, raw[k].c, raw[k].v, raw[k].w - j.bohr_frequency});
        }
        out.push_back(std::move(j));
        begin = end;
    }
    return out;
}

inline Generator build_global_generator(const MachineSpec& m, const LoadSpec& l, const CouplingSpec& c,
                                        const BathSpec& hot, const BathSpec& cold,
                                        double bin_tol = kDefaultBinTol) {
    OperatorMatrix h = build_total_hamiltonian(m, l, c);
    const HermitianEigen eig = eigh(h);
    auto basis = std::make_shared<const Matrix>(eig.eigenvectors);
    BathSpec hb = hot;
    BathSpec cb = cold;
    hb.label = BathLabel::Hot;
    cb.label = BathLabel::Cold;
    auto jumps = decompose_jump_operators(bath_coupling_operator(BathLabel::Hot, l.n_fock), eig, hb, bin_tol, basis);
    auto cold_jumps =
        decompose_jump_operators(bath_coupling_operator(BathLabel::Cold, l.n_fock), eig, cb, bin_tol, basis);
    jumps.insert(jumps.end(), std::make_move_iterator(cold_jumps.begin()), std::make_move_iterator(cold_jumps.end()));
    return Generator(GeneratorKind::Global, std::move(h), std::move(basis), eig.eigenvalues, {}, std::move(jumps),
                     l.n_fock);
}

// Weak-coupling generator with dissipators acting on the machine alone:
// lowering |1><j| with rate gamma0 (1 + N(w_j)) and raising |j><1| with rate
// gamma0 N(w_j), where j = 3 (hot, w_h) or j = 2 (cold, w_c).
inline Generator build_local_generator(const MachineSpec& m, const LoadSpec& l, const CouplingSpec& c,
                                       const BathSpec& hot, const BathSpec& cold, double gamma0 = kDefaultGamma0) {
    if (c.form != CouplingForm::RWA) {
        throw ValidationError("build_local_generator: the local generator requires the RWA coupling form");
    }
    if (!(gamma0 > 0.0)) throw ValidationError("build_local_generator: gamma0 must be > 0");
    OperatorMatrix h = build_total_hamiltonian(m, l, c);
    const Index d = h.dim();
    const Index n_l = l.n_fock;
    RealVector frame(d);
    for (Index k = 0; k < d; ++k) frame(k) = h(k, k).real();
    std::vector<SparseEntry> residual;
    for (Index col = 0; col < d; ++col) {
        for (Index row = 0; row < d; ++row) {
            if (row == col || h(row, col) == Complex(0.0)) continue;
            residual.push_back({row, col, h(row, col), frame(col) - frame(row)});
        }
    }
    auto basis = std::make_shared<const Matrix>(Matrix::Identity(d, d));

    std::vector<JumpOperator> jumps;
    const auto add_pair = [&](BathLabel label, Index upper, double omega, double beta) {
        const double nbar = bose_occupation(omega, beta);
        JumpOperator down;
        down.bohr_frequency = omega;
        down.bath = label;
        down.rate = gamma0 * (1.0 + nbar);
        down.basis = basis;
        JumpOperator up;
        up.bohr_frequency = -omega;
        up.bath = label;
        up.rate = gamma0 * nbar;
        up.basis = basis;
        for (Index n = 0; n < n_l; ++n) {
            const Index ground = n;
            const Index excited = upper * n_l + n;
            down.entries.push_back({ground, excited, 1.0, frame(excited) - frame(ground) - omega});
            up.entries.push_back({excited, ground, 1.0, frame(ground) - frame(excited) + omega});
        }
        jumps.push_back(std::move(down));
        jumps.push_back(std::move(up));
    };
    add_pair(BathLabel::Hot, 2, m.omega_h(), hot.beta);
    add_pair(BathLabel::Cold, 1, m.omega_c, cold.beta);
    return Generator(GeneratorKind::Local, std::move(h), std::move(basis), std::move(frame), std::move(residual),
                     std::move(jumps), n_l);
}

// rate * (A rho A† - 1/2 {A†A, rho}) with the lab-basis matrix of J
inline OperatorMatrix apply_dissipator(const JumpOperator& j, const OperatorMatrix& rho) {
    const OperatorMatrix a = j.matrix();
    if (a.dim() != rho.dim()) throw DimensionMismatch("apply_dissipator: dimension mismatch");
    const Matrix& am = a.entries();
    const Matrix& r = rho.entries();
    const Matrix ada = am.adjoint() * am;
    Matrix out = j.rate * (am * r * am.adjoint() - 0.5 * (ada * r + r * ada));
    return OperatorMatrix(std::move(out), rho.basis_tag());
}

// rho_dot = i[rho, H] + sum_j sum_w gamma_j(w) D_j[w](rho), lab basis in and out
inline OperatorMatrix liouvillian_apply(const Generator& g, const OperatorMatrix& rho) {
    if (rho.dim() != g.dim()) throw DimensionMismatch("liouvillian_apply: dimension mismatch");
    return OperatorMatrix(g.to_lab(g.apply_working(g.to_working(rho.entries()))), rho.basis_tag());
}

// Heat drawn into machine+load from one bath: sum_w gamma(w) Tr[H D[w](rho)].
inline double heat_current(const Generator& g, BathLabel bath, const OperatorMatrix& rho) {
    if (rho.dim() != g.dim()) throw DimensionMismatch("heat_current: dimension mismatch");
    return g.energy_trace(g.bath_dissipator_working(bath, g.to_working(rho.entries())));
}

// max |sum_w A_j(w) - A_j ⊗ I| in the lab basis
inline double completeness_error(const Generator& g, BathLabel bath) {
    Matrix sum = Matrix::Zero(g.dim(), g.dim());
    for (const auto& j : g.jumps()) {
        if (j.bath == bath) sum += j.working_matrix(g.dim());
    }
    const Matrix lab = g.to_lab(sum);
    return (lab - bath_coupling_operator(bath, g.load_dim()).entries()).cwiseAbs().maxCoeff();
}

}  // namespace qtm
