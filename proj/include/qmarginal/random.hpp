#pragma once

// Seeded Gaussian sampling built only on std::mt19937_64, whose output
// sequence is fixed by the standard. std::normal_distribution is not, and
// seeded instance files must reproduce byte-for-byte across toolchains.

#include "numerics.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qmarginal {

class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on (0, 1).
    double uniform() {
        double u = 0.0;
        while (u == 0.0) u = double(gen_() >> 11) * 0x1.0p-53;
        return u;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double t = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Entries i.i.d. standard complex Gaussian (real and imaginary parts N(0, 1/2)).
    ComplexMatrix ginibre(Eigen::Index rows, Eigen::Index cols) {
        ComplexMatrix a(rows, cols);
        const double s = std::sqrt(0.5);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) {
                const double re = normal(); // argument evaluation order is unspecified
                const double im = normal();
                a(i, j) = Complex(s * re, s * im);
            }
        return a;
    }

    RealVector normal_vector(Eigen::Index n) {
        RealVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    /// Haar-distributed unitary via QR of a Ginibre matrix with phase fix.
    ComplexMatrix haar_unitary(Eigen::Index n) {
        const ComplexMatrix z = ginibre(n, n);
        Eigen::HouseholderQR<ComplexMatrix> qr(z);
        ComplexMatrix q = qr.householderQ();
        const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < n; ++j) {
            const Complex d = r(j, j);
            if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
        }
        return q;
    }

    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Random Hermitian matrix with Ginibre-distributed entries, (G + G^dagger)/2.
inline HermitianMatrix random_hermitian(SeededRng& rng, std::size_t n) {
    const ComplexMatrix g = rng.ginibre(Eigen::Index(n), Eigen::Index(n));
    return HermitianMatrix(ComplexMatrix(0.5 * (g + g.adjoint())));
}

/// rho = A A^dagger / Tr(A A^dagger) with A Ginibre of size n x rank.
inline HermitianMatrix random_density(SeededRng& rng, std::size_t n, std::size_t rank) {
    const ComplexMatrix a = rng.ginibre(Eigen::Index(n), Eigen::Index(rank));
    ComplexMatrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return HermitianMatrix(rho);
}

} // namespace qmarginal
