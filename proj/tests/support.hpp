// support.hpp — shared helpers for the test suite

#pragma once

#include "qtm/linalg.hpp"

#include <cstdint>
#include <vector>

namespace qtm::testkit {

// SplitMix64; fixed seeds keep every property test reproducible
class Rng {
public:
    explicit Rng(std::uint64_t seed) : s_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (s_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    Index index(Index n) { return static_cast<Index>(next() % static_cast<std::uint64_t>(n)); }

private:
    std::uint64_t s_;
};

// random probability vector of length n
inline std::vector<double> random_distribution(Rng& rng, Index n) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double s = 0.0;
    for (auto& x : p) s += (x = rng.uniform() + 1e-3);
    for (auto& x : p) x /= s;
    return p;
}

// random full-rank density matrix rho = G G† / Tr
inline OperatorMatrix random_density(Rng& rng, Index d) {
    Matrix g(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) g(i, j) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    }
    Matrix r = g * g.adjoint();
    r /= r.trace();
    return OperatorMatrix(r);
}

inline OperatorMatrix random_hermitian(Rng& rng, Index d) {
    Matrix g(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) g(i, j) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    }
    return OperatorMatrix(0.5 * (g + g.adjoint()));
}

}  // namespace qtm::testkit
