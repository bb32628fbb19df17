// linalg.hpp — dense complex operators, Kronecker products, Hermitian eigensystems
//
// Tensor-product convention: machine index varies slowest, so the composite
// basis index of |i> (machine) ⊗ |n> (load) is i * load_dim + n.

#pragma once

#include "qtm/errors.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qtm {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

// Square complex matrix tagged with the basis it is expressed in.
class OperatorMatrix {
public:
    OperatorMatrix() = default;

    explicit OperatorMatrix(Matrix entries, std::string basis_tag = {})
        : m_(std::move(entries)), tag_(std::move(basis_tag)) {
        if (m_.rows() != m_.cols()) {
            throw DimensionMismatch("OperatorMatrix: entries must be square, got " +
                                    std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
        }
    }

    static OperatorMatrix zero(Index dim, std::string tag = {}) {
        return OperatorMatrix(Matrix::Zero(dim, dim), std::move(tag));
    }
    static OperatorMatrix identity(Index dim, std::string tag = {}) {
        return OperatorMatrix(Matrix::Identity(dim, dim), std::move(tag));
    }
    static OperatorMatrix diagonal(std::span<const double> values, std::string tag = {}) {
        const auto d = static_cast<Index>(values.size());
        Matrix m = Matrix::Zero(d, d);
        for (Index k = 0; k < d; ++k) m(k, k) = values[static_cast<std::size_t>(k)];
        return OperatorMatrix(std::move(m), std::move(tag));
    }
    // |row><col| in a dim-dimensional space
    static OperatorMatrix basis_op(Index dim, Index row, Index col, std::string tag = {}) {
        if (row < 0 || col < 0 || row >= dim || col >= dim) {
            throw DimensionMismatch("basis_op: index out of range");
        }
        Matrix m = Matrix::Zero(dim, dim);
        m(row, col) = 1.0;
        return OperatorMatrix(std::move(m), std::move(tag));
    }

    Index dim() const noexcept { return m_.rows(); }
    const Matrix& entries() const noexcept { return m_; }
    const std::string& basis_tag() const noexcept { return tag_; }

    Complex operator()(Index i, Index j) const { return m_(i, j); }

    OperatorMatrix adjoint() const { return OperatorMatrix(m_.adjoint(), tag_); }

    double max_abs() const { return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff(); }

    // max|M - M†| relative to max|M|; zero matrices are Hermitian.
    double hermiticity_error() const {
        const double scale = max_abs();
        if (scale == 0.0) return 0.0;
        return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() / scale;
    }
    bool is_hermitian(double rel_tol = 1e-12) const { return hermiticity_error() <= rel_tol; }

    Complex trace() const { return m_.trace(); }

    friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
        require_same_dim(a, b, "operator+");
        return OperatorMatrix(a.m_ + b.m_, a.tag_);
    }
    friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
        require_same_dim(a, b, "operator-");
        return OperatorMatrix(a.m_ - b.m_, a.tag_);
    }
    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
        require_same_dim(a, b, "operator*");
        return OperatorMatrix(a.m_ * b.m_, a.tag_);
    }
    friend OperatorMatrix operator*(Complex s, const OperatorMatrix& a) {
        return OperatorMatrix(s * a.m_, a.tag_);
    }

private:
    static void require_same_dim(const OperatorMatrix& a, const OperatorMatrix& b, const char* where) {
        if (a.dim() != b.dim()) {
            throw DimensionMismatch(std::string(where) + ": " + std::to_string(a.dim()) +
                                    " vs " + std::to_string(b.dim()));
        }
    }

    Matrix m_;
    std::string tag_;
};

// Eigendecomposition H = U diag(eps) U†, eigenvalues ascending.
struct HermitianEigen {
    RealVector eigenvalues;
    Matrix eigenvectors;  // column k <-> eigenvalue k

    Index dim() const noexcept { return eigenvalues.size(); }

    Matrix to_eigen(const Matrix& lab) const { return eigenvectors.adjoint() * lab * eigenvectors; }
    Matrix to_lab(const Matrix& eig) const { return eigenvectors * eig * eigenvectors.adjoint(); }
};

inline OperatorMatrix kron(const OperatorMatrix& a, const OperatorMatrix& b) {
    Matrix k = Eigen::kroneckerProduct(a.entries(), b.entries()).eval();
    std::string tag = a.basis_tag().empty() && b.basis_tag().empty()
                          ? std::string{}
                          : a.basis_tag() + "⊗" + b.basis_tag();
    return OperatorMatrix(std::move(k), std::move(tag));
}

namespace detail {

// Connected components of the nonzero pattern of a square matrix, each sorted.
inline std::vector<std::vector<Index>> connected_blocks(const Matrix& m) {
    const Index d = m.rows();
    std::vector<Index> parent(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) parent[static_cast<std::size_t>(k)] = k;
    const auto find = [&](Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) {
            if (i == j || m(i, j) == Complex(0.0)) continue;
            const Index a = find(i);
            const Index b = find(j);
            if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        }
    }
    std::vector<std::vector<Index>> blocks;
    std::vector<Index> slot(static_cast<std::size_t>(d), -1);
    for (Index k = 0; k < d; ++k) {
        const Index root = find(k);
        auto& s = slot[static_cast<std::size_t>(root)];
        if (s < 0) {
            s = static_cast<Index>(blocks.size());
            blocks.emplace_back();
        }
        blocks[static_cast<std::size_t>(s)].push_back(k);
    }
    return blocks;
}

}  // namespace detail

// Solves each decoupled block of H separately, so eigenvectors are exactly
// zero outside the block they belong to. Eigenvalues are returned ascending
// (ties keep block order).
inline HermitianEigen eigh(const OperatorMatrix& h, double herm_tol = 1e-12) {
    if (h.dim() == 0) throw DimensionMismatch("eigh: empty matrix");
    if (const double err = h.hermiticity_error(); err > herm_tol) {
        throw NotHermitian("eigh: relative asymmetry " + fmt_num(err));
    }
    const Index d = h.dim();
    const Matrix sym = 0.5 * (h.entries() + h.entries().adjoint());
    RealVector values(d);
    Matrix vectors = Matrix::Zero(d, d);
    Index next = 0;
    for (const auto& block : detail::connected_blocks(sym)) {
        const auto b = static_cast<Index>(block.size());
        Matrix sub(b, b);
        for (Index i = 0; i < b; ++i) {
            for (Index j = 0; j < b; ++j) sub(i, j) = sym(block[static_cast<std::size_t>(i)], block[static_cast<std::size_t>(j)]);
        }
        Eigen::SelfAdjointEigenSolver<Matrix> solver(sub);
        if (solver.info() != Eigen::Success) throw Error("eigh: decomposition failed");
        for (Index k = 0; k < b; ++k, ++next) {
            values(next) = solver.eigenvalues()(k);
            for (Index i = 0; i < b; ++i) vectors(block[static_cast<std::size_t>(i)], next) = solver.eigenvectors()(i, k);
        }
    }
    std::vector<Index> order(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) order[static_cast<std::size_t>(k)] = k;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) < values(b); });
    HermitianEigen out{RealVector(d), Matrix(d, d)};
    for (Index k = 0; k < d; ++k) {
        out.eigenvalues(k) = values(order[static_cast<std::size_t>(k)]);
        out.eigenvectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

// Tr_machine: returns the load_dim x load_dim reduced state.
inline OperatorMatrix partial_trace_load(const OperatorMatrix& rho, Index machine_dim, Index load_dim) {
    if (machine_dim <= 0 || load_dim <= 0 || rho.dim() != machine_dim * load_dim) {
        throw DimensionMismatch("partial_trace_load: dim " + std::to_string(rho.dim()) + " != " +
                                std::to_string(machine_dim) + "*" + std::to_string(load_dim));
    }
    Matrix out = Matrix::Zero(load_dim, load_dim);
    for (Index i = 0; i < machine_dim; ++i) {
        out += rho.entries().block(i * load_dim, i * load_dim, load_dim, load_dim);
    }
    return OperatorMatrix(std::move(out), "load");
}

// Tr_load: returns the machine_dim x machine_dim reduced state.
inline OperatorMatrix partial_trace_machine(const OperatorMatrix& rho, Index machine_dim, Index load_dim) {
    if (machine_dim <= 0 || load_dim <= 0 || rho.dim() != machine_dim * load_dim) {
        throw DimensionMismatch("partial_trace_machine: dimension mismatch");
    }
    Matrix out(machine_dim, machine_dim);
    for (Index i = 0; i < machine_dim; ++i) {
        for (Index j = 0; j < machine_dim; ++j) {
            out(i, j) = rho.entries().block(i * load_dim, j * load_dim, load_dim, load_dim).trace();
        }
    }
    return OperatorMatrix(std::move(out), "machine");
}

// Tr(O rho)
inline Complex expectation(const OperatorMatrix& op, const OperatorMatrix& rho) {
    if (op.dim() != rho.dim()) {
        throw DimensionMismatch("expectation: " + std::to_string(op.dim()) + " vs " +
                                std::to_string(rho.dim()));
    }
    // Tr(AB) = sum_ij A_ij B_ji
    return op.entries().cwiseProduct(rho.entries().transpose()).sum();
}

}  // namespace qtm
