// evolve.hpp — time integration of rho_dot = L(rho) and load observables
//
// Integration runs in the interaction picture of the generator's frame
// energies, rho~ = exp(i L t) rho_w exp(-i L t). The secular dissipator is
// (up to bin_tol phase offsets, which are kept exactly) invariant under that
// frame, so the transformed equation is slow and non-stiff. The state is
// stored only on its reachable support: the closure of the initial nonzero
// pattern under the generator. Entries outside the support are exactly zero
// for all times.

#pragma once

#include "qtm/errors.hpp"
#include "qtm/linalg.hpp"
#include "qtm/master_eq.hpp"
#include "qtm/model.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace qtm {

// ---------------------------------------------------------------------------
// Load-state observables

inline std::vector<double> load_populations(const OperatorMatrix& rho, Index load_dim) {
    if (load_dim <= 0 || rho.dim() % load_dim != 0) throw DimensionMismatch("load_populations: dimension mismatch");
    const auto red = partial_trace_load(rho, rho.dim() / load_dim, load_dim);
    std::vector<double> p(static_cast<std::size_t>(load_dim));
    for (Index n = 0; n < load_dim; ++n) p[static_cast<std::size_t>(n)] = red(n, n).real();
    return p;
}

struct Moments {
    double mu = 0.0;
    double sigma2 = 0.0;
};

inline Moments moments(std::span<const double> p) {
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        const double x = static_cast<double>(n);
        m1 += x * p[n];
        m2 += x * x * p[n];
    }
    return {m1, std::max(0.0, m2 - m1 * m1)};
}

inline RealVector hermitian_eigenvalues(const OperatorMatrix& m) { return eigh(m, 1e-8).eigenvalues; }

// -sum_k lambda_k ln lambda_k, with 0 ln 0 = 0 (tiny negative rounding is dropped)
inline double von_neumann_entropy(const OperatorMatrix& rho) {
    const RealVector ev = hermitian_eigenvalues(rho);
    double s = 0.0;
    for (Index k = 0; k < ev.size(); ++k) {
        if (ev(k) > 0.0) s -= ev(k) * std::log(ev(k));
    }
    return s;
}

// Energy of the passive state: eigenvalues of rho in descending order
// paired with energies of H in ascending order.
inline double passive_energy(const OperatorMatrix& rho, const OperatorMatrix& h) {
    if (rho.dim() != h.dim()) throw DimensionMismatch("passive_energy: dimension mismatch");
    RealVector r = hermitian_eigenvalues(rho);
    RealVector e = hermitian_eigenvalues(h);
    std::sort(r.data(), r.data() + r.size(), std::greater<>());
    std::sort(e.data(), e.data() + e.size());
    return r.dot(e);
}

inline double ergotropy(const OperatorMatrix& rho, const OperatorMatrix& h) {
    return expectation(h, rho).real() - passive_energy(rho, h);
}

// |1><1| ⊗ |n_init><n_init| on the composite space
inline OperatorMatrix initial_state(const LoadSpec& l) {
    const Index d = kMachineDim * l.n_fock;
    return OperatorMatrix::basis_op(d, l.initial_level, l.initial_level, "machine⊗fock");
}

// ---------------------------------------------------------------------------
// Series

struct SimulationState {
    double t = 0.0;
    OperatorMatrix rho;
};

struct IntegratorOptions {
    double t_final = 100.0;
    double sample_dt = 1.0;
    double tol = 1e-8;
    double initial_step = 0.0;  // 0 picks min(sample_dt, 1)
    double min_step = 1e-9;
    double truncation_limit = 1e-8;  // max population in the top 10% of Fock levels
    double positivity_limit = -1e-6;
    // Steps are capped inside the pair's stability region, which reaches about
    // 3.3 along the negative real axis but only about 1 along the imaginary
    // axis; otherwise unresolved tail components can grow unnoticed.
    double real_stability = 3.0;
    double imaginary_stability = 0.9;
    // Support blocks larger than this are eigen-checked every positivity_stride samples.
    Index dense_block_limit = 64;
    int positivity_stride = 10;
};

struct IntegratorDiagnostics {
    long accepted_steps = 0;
    long rejected_steps = 0;
    long rhs_evaluations = 0;
    double smallest_step = std::numeric_limits<double>::infinity();
    double largest_step = 0.0;
    Index support_size = 0;
    Index largest_block = 0;
    double step_cap = 0.0;
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = std::numeric_limits<double>::infinity();
    double max_first_law_residual = 0.0;
    double max_top_band_population = 0.0;
};

struct ObservableSeries {
    double omega_l = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> p_n;
    std::vector<double> mu;
    std::vector<double> sigma2;
    std::vector<double> energy_load;
    std::vector<double> entropy_load;
    std::vector<double> ergotropy_load;
    std::vector<double> qdot_hot;
    std::vector<double> qdot_cold;
    std::vector<double> energy_total;
    std::vector<double> energy_rate;  // d/dt Tr(H rho) from the full generator
    std::vector<std::array<double, 3>> machine_populations;
    IntegratorDiagnostics diagnostics;
    SimulationState final_state;

    std::size_t size() const noexcept { return times.size(); }
};

namespace detail {

// Interaction-picture generator restricted to the reachable support.
class SupportRhs {
public:
    SupportRhs(const Generator& g, const Matrix& rho_w0) : g_(&g), d_(g.dim()) {
        build_k_entries();
        close_support(rho_w0);
        compile_terms();
        find_blocks();
    }

    Index size() const noexcept { return static_cast<Index>(pairs_.size()); }
    Index largest_block() const noexcept {
        Index m = 0;
        for (const auto& b : blocks_) m = std::max<Index>(m, static_cast<Index>(b.size()));
        return m;
    }

    // Row-sum bound on the commutator with the residual Hamiltonian (purely
    // imaginary spectrum).
    double coherent_norm() const {
        std::vector<double> row(static_cast<std::size_t>(d_), 0.0);
        for (const auto& e : g_->residual()) row[static_cast<std::size_t>(e.row)] += std::abs(e.value);
        return row.empty() ? 0.0 : 2.0 * *std::max_element(row.begin(), row.end());
    }

    // Row-sum bound on the right-hand side's Jacobian; bounds its spectral radius.
    double jacobian_norm() const {
        std::vector<double> row(pairs_.size(), 0.0);
        for (const auto& kt : k_terms_) {
            const double a = std::abs(k_entries_[static_cast<std::size_t>(kt.k)].value);
            row[static_cast<std::size_t>(kt.out)] += a;
            row[static_cast<std::size_t>(transpose_[static_cast<std::size_t>(kt.out)])] += a;
        }
        for (const auto& jt : j_terms_) {
            row[static_cast<std::size_t>(jt.out)] +=
                jt.rate * std::abs(amp_[static_cast<std::size_t>(jt.e)]) * std::abs(amp_[static_cast<std::size_t>(jt.f)]);
        }
        return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
    }

    Eigen::VectorXcd pack(const Matrix& m) const {
        Eigen::VectorXcd y(size());
        for (Index p = 0; p < size(); ++p) y(p) = m(pairs_[p].first, pairs_[p].second);
        return y;
    }

    // Schrödinger-picture working-basis state at time t
    Matrix working_state(double t, const Eigen::VectorXcd& y) const {
        const Eigen::VectorXcd f = frame_phases(t);
        Matrix m = Matrix::Zero(d_, d_);
        for (Index p = 0; p < size(); ++p) {
            const auto [i, j] = pairs_[p];
            m(i, j) = y(p) * f(i) * std::conj(f(j));
        }
        return m;
    }

    Eigen::SparseMatrix<Complex> working_state_sparse(double t, const Eigen::VectorXcd& y) const {
        const Eigen::VectorXcd f = frame_phases(t);
        std::vector<Eigen::Triplet<Complex>> trip;
        trip.reserve(pairs_.size());
        for (Index p = 0; p < size(); ++p) {
            const auto [i, j] = pairs_[p];
            trip.emplace_back(i, j, y(p) * f(i) * std::conj(f(j)));
        }
        Eigen::SparseMatrix<Complex> s(d_, d_);
        s.setFromTriplets(trip.begin(), trip.end());
        return s;
    }

    double trace(const Eigen::VectorXcd& y) const {
        double t = 0.0;
        for (const Index p : diagonal_) t += y(p).real();
        return t;
    }

    double hermiticity_error(const Eigen::VectorXcd& y) const {
        double e = 0.0;
        for (Index p = 0; p < size(); ++p) e = std::max(e, std::abs(y(p) - std::conj(y(transpose_[p]))));
        return e;
    }

    // Smallest eigenvalue over support blocks; blocks larger than the limit
    // are skipped unless include_large.
    double min_eigenvalue(const Eigen::VectorXcd& y, Index dense_limit, bool include_large) const {
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& b : blocks_) {
            const auto n = static_cast<Index>(b.size());
            if (n == 1) {
                lo = std::min(lo, y(index_at(b[0], b[0])).real());
                continue;
            }
            if (n > dense_limit && !include_large) continue;
            Matrix sub = Matrix::Zero(n, n);
            for (Index r = 0; r < n; ++r) {
                for (Index c = 0; c < n; ++c) {
                    const int p = index_at(b[static_cast<std::size_t>(r)], b[static_cast<std::size_t>(c)]);
                    if (p >= 0) sub(r, c) = y(p);
                }
            }
            Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sub + sub.adjoint()), Eigen::EigenvaluesOnly);
            lo = std::min(lo, es.eigenvalues().minCoeff());
        }
        return lo;
    }

    void eval(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        for (std::size_t e = 0; e < amp_.size(); ++e) {
            amp_t_[e] = amp_offset_[e] == 0.0 ? amp_[e] : amp_[e] * std::polar(1.0, -amp_offset_[e] * t);
        }
        for (std::size_t k = 0; k < k_entries_.size(); ++k) {
            const auto& ke = k_entries_[k];
            k_t_[k] = -kI * (ke.offset == 0.0 ? ke.value : ke.value * std::polar(1.0, -ke.offset * t));
        }
        scratch_.setZero(size());
        for (const auto& kt : k_terms_) scratch_(kt.out) += k_t_[static_cast<std::size_t>(kt.k)] * y(kt.in);
        dy.resize(size());
        for (Index p = 0; p < size(); ++p) dy(p) = scratch_(p) + std::conj(scratch_(transpose_[p]));
        for (const auto& jt : j_terms_) {
            dy(jt.out) += jt.rate * amp_t_[static_cast<std::size_t>(jt.e)] *
                          std::conj(amp_t_[static_cast<std::size_t>(jt.f)]) * y(jt.in);
        }
    }

private:
    struct KTerm {
        Index out;
        Index in;
        int k;
    };
    struct JTerm {
        Index out;
        Index in;
        int e;
        int f;
        double rate;
    };

    Eigen::VectorXcd frame_phases(double t) const {
        const RealVector& lam = g_->frame_energies();
        Eigen::VectorXcd f(d_);
        for (Index i = 0; i < d_; ++i) f(i) = std::polar(1.0, -lam(i) * t);
        return f;
    }

    int index_at(Index i, Index j) const { return index_[static_cast<std::size_t>(i * d_ + j)]; }

    // K = R - (i/2)(B_hot + B_cold), so that the coherent and anticommutator
    // parts together read -i(K rho - rho K†).
    void build_k_entries() {
        std::map<std::pair<Index, Index>, SparseEntry> acc;
        const auto merge = [&](const SparseEntry& e, Complex scale) {
            auto [it, inserted] = acc.try_emplace({e.row, e.col}, SparseEntry{e.row, e.col, 0.0, e.offset});
            it->second.value += scale * e.value;
        };
        for (const auto& e : g_->residual()) merge(e, 1.0);
        for (const auto& e : g_->decay_operator(BathLabel::Hot)) merge(e, -0.5 * kI);
        for (const auto& e : g_->decay_operator(BathLabel::Cold)) merge(e, -0.5 * kI);
        for (const auto& [key, e] : acc) {
            if (e.value != Complex(0.0)) k_entries_.push_back(e);
        }
        k_t_.resize(k_entries_.size());

        for (const auto& j : g_->jumps()) {
            if (j.rate == 0.0) continue;
            jump_begin_.push_back(static_cast<int>(amp_.size()));
            for (const auto& e : j.entries) {
                amp_.push_back(e.value);
                amp_offset_.push_back(e.offset);
                amp_row_.push_back(e.row);
                amp_col_.push_back(e.col);
            }
            jump_rate_.push_back(j.rate);
        }
        jump_begin_.push_back(static_cast<int>(amp_.size()));
        amp_t_.resize(amp_.size());
    }

    void close_support(const Matrix& rho0) {
        index_.assign(static_cast<std::size_t>(d_ * d_), -1);
        std::deque<std::pair<Index, Index>> queue;
        const auto add = [&](Index i, Index j) {
            for (const auto& [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
                auto& slot = index_[static_cast<std::size_t>(a * d_ + b)];
                if (slot >= 0) continue;
                slot = static_cast<int>(pairs_.size());
                pairs_.emplace_back(a, b);
                queue.emplace_back(a, b);
            }
        };
        for (Index j = 0; j < d_; ++j) {
            for (Index i = 0; i < d_; ++i) {
                if (rho0(i, j) != Complex(0.0)) add(i, j);
            }
        }
        std::vector<std::vector<int>> k_by_col(static_cast<std::size_t>(d_));
        for (std::size_t k = 0; k < k_entries_.size(); ++k) {
            k_by_col[static_cast<std::size_t>(k_entries_[k].col)].push_back(static_cast<int>(k));
        }
        // jump entries by column, tagged with their jump
        std::vector<std::vector<std::pair<int, int>>> j_by_col(static_cast<std::size_t>(d_));
        for (std::size_t jj = 0; jj + 1 < jump_begin_.size(); ++jj) {
            for (int e = jump_begin_[jj]; e < jump_begin_[jj + 1]; ++e) {
                j_by_col[static_cast<std::size_t>(amp_col_[static_cast<std::size_t>(e)])].emplace_back(
                    static_cast<int>(jj), e);
            }
        }
        while (!queue.empty()) {
            const auto [a, b] = queue.front();
            queue.pop_front();
            for (const int k : k_by_col[static_cast<std::size_t>(a)]) add(k_entries_[static_cast<std::size_t>(k)].row, b);
            const auto& ca = j_by_col[static_cast<std::size_t>(a)];
            const auto& cb = j_by_col[static_cast<std::size_t>(b)];
            for (const auto& [ja, e] : ca) {
                for (const auto& [jb, f] : cb) {
                    if (ja == jb) add(amp_row_[static_cast<std::size_t>(e)], amp_row_[static_cast<std::size_t>(f)]);
                }
            }
        }
        transpose_.resize(pairs_.size());
        for (std::size_t p = 0; p < pairs_.size(); ++p) {
            transpose_[p] = index_at(pairs_[p].second, pairs_[p].first);
            if (pairs_[p].first == pairs_[p].second) diagonal_.push_back(static_cast<Index>(p));
        }
    }

    void compile_terms() {
        std::vector<std::vector<Index>> cols_in_row(static_cast<std::size_t>(d_));
        for (const auto& [i, j] : pairs_) cols_in_row[static_cast<std::size_t>(i)].push_back(j);
        for (std::size_t k = 0; k < k_entries_.size(); ++k) {
            const auto& ke = k_entries_[k];
            for (const Index c : cols_in_row[static_cast<std::size_t>(ke.col)]) {
                k_terms_.push_back({index_at(ke.row, c), index_at(ke.col, c), static_cast<int>(k)});
            }
        }
        for (std::size_t jj = 0; jj + 1 < jump_begin_.size(); ++jj) {
            for (int e = jump_begin_[jj]; e < jump_begin_[jj + 1]; ++e) {
                for (int f = jump_begin_[jj]; f < jump_begin_[jj + 1]; ++f) {
                    const int in = index_at(amp_col_[static_cast<std::size_t>(e)], amp_col_[static_cast<std::size_t>(f)]);
                    if (in < 0) continue;
                    const int out = index_at(amp_row_[static_cast<std::size_t>(e)], amp_row_[static_cast<std::size_t>(f)]);
                    j_terms_.push_back({out, in, e, f, jump_rate_[jj]});
                }
            }
        }
    }

    void find_blocks() {
        Matrix pattern = Matrix::Zero(d_, d_);
        std::vector<char> used(static_cast<std::size_t>(d_), 0);
        for (const auto& [i, j] : pairs_) {
            pattern(i, j) = 1.0;
            used[static_cast<std::size_t>(i)] = 1;
        }
        for (auto& b : connected_blocks(pattern)) {
            if (used[static_cast<std::size_t>(b.front())]) blocks_.push_back(std::move(b));
        }
    }

    const Generator* g_;
    Index d_;
    std::vector<std::pair<Index, Index>> pairs_;
    std::vector<int> index_;
    std::vector<int> transpose_;
    std::vector<Index> diagonal_;
    std::vector<std::vector<Index>> blocks_;

    std::vector<SparseEntry> k_entries_;
    std::vector<Complex> k_t_;
    std::vector<KTerm> k_terms_;

    std::vector<Complex> amp_;
    std::vector<double> amp_offset_;
    std::vector<Index> amp_row_;
    std::vector<Index> amp_col_;
    std::vector<int> jump_begin_;
    std::vector<double> jump_rate_;
    std::vector<Complex> amp_t_;
    std::vector<JTerm> j_terms_;

    Eigen::VectorXcd scratch_;
};

// Reduced load state and machine populations of a working-basis state.
struct ReducedStates {
    OperatorMatrix load;
    std::array<double, 3> machine{};
};

inline ReducedStates reduce_working_state(const Generator& g, const Eigen::SparseMatrix<Complex>& rho_w) {
    const Index n = g.load_dim();
    const Index m = g.machine_dim();
    Matrix red = Matrix::Zero(n, n);
    ReducedStates out;
    if (g.kind() == GeneratorKind::Local) {
        // identity working basis
        for (Index k = 0; k < rho_w.outerSize(); ++k) {
            for (Eigen::SparseMatrix<Complex>::InnerIterator it(rho_w, k); it; ++it) {
                const Index r = it.row();
                const Index c = it.col();
                if (r / n != c / n) continue;
                red(r % n, c % n) += it.value();
            }
        }
        for (Index i = 0; i < std::min<Index>(m, 3); ++i) {
            double s = 0.0;
            for (Index k = 0; k < n; ++k) s += rho_w.coeff(i * n + k, i * n + k).real();
            out.machine[static_cast<std::size_t>(i)] = s;
        }
    } else {
        const Matrix& u = g.basis();
        for (Index i = 0; i < m; ++i) {
            const auto ui = u.middleRows(i * n, n);
            const Matrix t = rho_w * ui.adjoint();
            const Matrix block = ui * t;
            red += block;
            if (i < 3) out.machine[static_cast<std::size_t>(i)] = block.trace().real();
        }
    }
    out.load = OperatorMatrix(std::move(red), "load");
    return out;
}

}  // namespace detail

// Adaptive Dormand-Prince 5(4) integration of the generator from a lab-basis
// initial state, recording observables at multiples of sample_dt.
inline ObservableSeries integrate(const Generator& g, const OperatorMatrix& rho0, const IntegratorOptions& opt,
                                  double omega_l) {
    if (rho0.dim() != g.dim()) throw DimensionMismatch("integrate: initial state dimension mismatch");
    if (!(opt.t_final > 0.0)) throw ValidationError("integrate: t_final must be > 0");
    if (!(opt.sample_dt > 0.0)) throw ValidationError("integrate: sample_dt must be > 0");
    if (!(opt.tol > 0.0)) throw ValidationError("integrate: tol must be > 0");

    const Matrix rho_w0 = g.to_working(rho0.entries());
    detail::SupportRhs rhs(g, rho_w0);
    Eigen::VectorXcd y = rhs.pack(rho_w0);

    const Index n_l = g.load_dim();
    const OperatorMatrix h_load = [&] {
        Matrix h = Matrix::Zero(n_l, n_l);
        for (Index k = 0; k < n_l; ++k) h(k, k) = omega_l * (static_cast<double>(k) + 0.5);
        return OperatorMatrix(std::move(h), "load");
    }();
    const Index band = truncation_band(n_l);

    ObservableSeries s;
    s.omega_l = omega_l;
    auto& diag = s.diagnostics;
    diag.support_size = rhs.size();
    diag.largest_block = rhs.largest_block();
    int sample_count = 0;

    const auto record = [&](double t, bool final_sample) {
        const double tr = rhs.trace(y);
        diag.max_trace_error = std::max(diag.max_trace_error, std::abs(tr - 1.0));
        diag.max_hermiticity_error = std::max(diag.max_hermiticity_error, rhs.hermiticity_error(y));
        const bool full_check = final_sample || sample_count % std::max(1, opt.positivity_stride) == 0;
        const double lo = rhs.min_eigenvalue(y, opt.dense_block_limit, full_check);
        diag.min_eigenvalue = std::min(diag.min_eigenvalue, lo);
        ++sample_count;
        if (lo < opt.positivity_limit) {
            throw PositivityLoss("integrate: density matrix eigenvalue " + fmt_num(lo) + " at t = " +
                                     fmt_num(t),
                                 t);
        }

        const auto sparse = rhs.working_state_sparse(t, y);
        const auto red = detail::reduce_working_state(g, sparse);
        std::vector<double> p(static_cast<std::size_t>(n_l));
        for (Index k = 0; k < n_l; ++k) p[static_cast<std::size_t>(k)] = red.load(k, k).real();
        double top = 0.0;
        for (Index k = n_l - band; k < n_l; ++k) top += std::max(0.0, p[static_cast<std::size_t>(k)]);
        diag.max_top_band_population = std::max(diag.max_top_band_population, top);
        if (top > opt.truncation_limit) {
            throw TruncationOverflow("integrate: population " + fmt_num(top) + " in the top " +
                                         std::to_string(band) + " Fock levels at t = " + fmt_num(t) +
                                         " (mean occupation " + fmt_num(moments(p).mu) + ")",
                                     t);
        }

        const Matrix rho_w = Matrix(sparse);
        const double qh = g.energy_trace(g.bath_dissipator_working(BathLabel::Hot, rho_w));
        const double qc = g.energy_trace(g.bath_dissipator_working(BathLabel::Cold, rho_w));
        const double de = g.energy_trace(g.apply_working(rho_w));
        const double scale = std::max({std::abs(qh), std::abs(qc), 1e-12});
        diag.max_first_law_residual = std::max(diag.max_first_law_residual, std::abs(de - (qh + qc)) / scale);

        const Moments mom = moments(p);
        s.times.push_back(t);
        s.mu.push_back(mom.mu);
        s.sigma2.push_back(mom.sigma2);
        s.energy_load.push_back(expectation(h_load, red.load).real());
        s.entropy_load.push_back(von_neumann_entropy(red.load));
        s.ergotropy_load.push_back(ergotropy(red.load, h_load));
        s.qdot_hot.push_back(qh);
        s.qdot_cold.push_back(qc);
        s.energy_total.push_back(g.energy_trace(rho_w));
        s.energy_rate.push_back(de);
        s.machine_populations.push_back(red.machine);
        s.p_n.push_back(std::move(p));
    };

    // Dormand-Prince tableau
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                     a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                     b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                     e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    const auto n_samples = static_cast<long>(std::floor(opt.t_final / opt.sample_dt * (1.0 + 1e-12)));
    double t = 0.0;
    record(0.0, n_samples == 0);

    Eigen::VectorXcd k1, k2, k3, k4, k5, k6, k7, ytmp, y5;
    rhs.eval(t, y, k1);
    diag.rhs_evaluations = 1;
    const double load = rhs.jacobian_norm() / opt.real_stability + rhs.coherent_norm() / opt.imaginary_stability;
    const double h_cap = load > 0.0 ? 1.0 / load : std::numeric_limits<double>::infinity();
    diag.step_cap = h_cap;
    double h = std::min(opt.initial_step > 0.0 ? opt.initial_step : std::min(opt.sample_dt, 1.0), h_cap);

    for (long sample = 1; sample <= n_samples; ++sample) {
        const double target = static_cast<double>(sample) * opt.sample_dt;
        while (t < target) {
            const bool last = t + h >= target * (1.0 - 1e-14);
            const double step = last ? target - t : h;
            ytmp = y + step * a21 * k1;
            rhs.eval(t + step / 5.0, ytmp, k2);
            ytmp = y + step * (a31 * k1 + a32 * k2);
            rhs.eval(t + 3.0 * step / 10.0, ytmp, k3);
            ytmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
            rhs.eval(t + 4.0 * step / 5.0, ytmp, k4);
            ytmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            rhs.eval(t + 8.0 * step / 9.0, ytmp, k5);
            ytmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            rhs.eval(t + step, ytmp, k6);
            y5 = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            rhs.eval(t + step, y5, k7);
            diag.rhs_evaluations += 6;

            const double err_abs =
                (step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)).cwiseAbs().maxCoeff();
            const double scale = opt.tol * std::max(y.cwiseAbs().maxCoeff(), y5.cwiseAbs().maxCoeff());
            const double err = err_abs / std::max(scale, std::numeric_limits<double>::min());
            const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err <= 1.0) {
                t = last ? target : t + step;
                y.swap(y5);
                k1.swap(k7);
                ++diag.accepted_steps;
                diag.smallest_step = std::min(diag.smallest_step, step);
                diag.largest_step = std::max(diag.largest_step, step);
                // a step shortened to land on a sample keeps the proposed size
                if (!last || step >= h) h = std::min(step * fac, h_cap);
            } else {
                ++diag.rejected_steps;
                h = step * std::min(1.0, fac);
            }
            if (h < opt.min_step) {
                throw StepUnderflow("integrate: step size " + fmt_num(h) + " below minimum at t = " +
                                        fmt_num(t),
                                    t);
            }
        }
        record(t, sample == n_samples);
    }

    s.final_state = SimulationState{t, OperatorMatrix(g.to_lab(rhs.working_state(t, y)), "machine⊗fock")};
    return s;
}

}  // namespace qtm
