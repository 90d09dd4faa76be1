#pragma once

// Dense complex linear-algebra kernel shared by every other header:
// Hermitian wrapper type, spectral decomposition, PSD projection,
// numerical rank, and the real coordinate map for Hermitian matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmarginal {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kDefaultHermTol = 1e-8;
inline constexpr double kDefaultRankTol = 1e-9;
inline constexpr double kDefaultEigTol = 1e-10;

/// Input violates a structural contract (shape, finiteness, symmetry).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Operand dimensions disagree.
struct DimensionMismatch : InvalidInput {
    using InvalidInput::InvalidInput;
};

/// A matrix that should be a (sub)normalized state is not PSD.
struct InvalidState : InvalidInput {
    using InvalidInput::InvalidInput;
};

/// An operation was called outside its domain (e.g. infeasible start point).
struct PreconditionError : std::logic_error {
    using std::logic_error::logic_error;
};

/// A numerical post-condition that should hold by construction failed.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const ComplexMatrix& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
    return true;
}

/// Square complex matrix stored in exactly symmetrized form (A + A^dagger) / 2.
class HermitianMatrix {
  public:
    HermitianMatrix() = default;

    explicit HermitianMatrix(const ComplexMatrix& a, double herm_tol = kDefaultHermTol) {
        if (a.rows() != a.cols())
            throw DimensionMismatch("HermitianMatrix: matrix is " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + ", expected square");
        if (!all_finite(a)) throw InvalidInput("HermitianMatrix: non-finite entries");
        const double norm = a.norm();
        const double skew = (a - a.adjoint()).norm();
        if (skew > herm_tol * std::max(norm, 1.0))
            throw InvalidInput("HermitianMatrix: ||A - A^dagger||_F = " + std::to_string(skew) +
                               " exceeds tolerance");
        m_ = 0.5 * (a + a.adjoint());
    }

    static HermitianMatrix identity(std::size_t dim) {
        return HermitianMatrix(ComplexMatrix::Identity(Eigen::Index(dim), Eigen::Index(dim)));
    }
    static HermitianMatrix zero(std::size_t dim) {
        return HermitianMatrix(ComplexMatrix::Zero(Eigen::Index(dim), Eigen::Index(dim)));
    }
    static HermitianMatrix maximally_mixed(std::size_t dim) {
        return HermitianMatrix(ComplexMatrix::Identity(Eigen::Index(dim), Eigen::Index(dim)) / double(dim));
    }
    /// |v><v|
    static HermitianMatrix projector(const ComplexVector& v) { return HermitianMatrix(v * v.adjoint()); }

    std::size_t dim() const { return std::size_t(m_.rows()); }
    const ComplexMatrix& matrix() const { return m_; }
    Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    double trace() const { return m_.trace().real(); }
    double norm() const { return m_.norm(); }

    HermitianMatrix operator+(const HermitianMatrix& o) const { return HermitianMatrix(m_ + o.m_); }
    HermitianMatrix operator-(const HermitianMatrix& o) const { return HermitianMatrix(m_ - o.m_); }
    HermitianMatrix operator*(double s) const { return HermitianMatrix(m_ * s); }
    HermitianMatrix operator/(double s) const { return HermitianMatrix(m_ / s); }

  private:
    ComplexMatrix m_;
};

inline HermitianMatrix operator*(double s, const HermitianMatrix& h) { return h * s; }

struct EigDecomposition {
    RealVector eigenvalues;     // ascending
    ComplexMatrix eigenvectors; // columns, unitary

    std::size_t dim() const { return std::size_t(eigenvalues.size()); }

    ComplexMatrix reconstruct() const {
        return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
    }
};

inline EigDecomposition eig_hermitian(const HermitianMatrix& a) {
    if (!all_finite(a.matrix())) throw InvalidInput("eig_hermitian: non-finite entries");
    if (a.dim() == 0) return {};
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a.matrix());
    if (solver.info() != Eigen::Success) throw NumericalError("eig_hermitian: eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double rank_threshold(const RealVector& eigenvalues, double rank_tol) {
    double scale = 1.0;
    if (eigenvalues.size() > 0) scale = std::max(scale, eigenvalues.cwiseAbs().maxCoeff());
    return rank_tol * scale;
}

inline std::size_t numerical_rank(const RealVector& eigenvalues, double rank_tol = kDefaultRankTol) {
    if (rank_tol < 0) throw InvalidInput("numerical_rank: rank_tol must be >= 0");
    const double thr = rank_threshold(eigenvalues, rank_tol);
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        if (std::abs(eigenvalues[i]) > thr) ++r;
    return r;
}

inline std::size_t numerical_rank(const HermitianMatrix& a, double rank_tol = kDefaultRankTol) {
    if (rank_tol < 0) throw InvalidInput("numerical_rank: rank_tol must be >= 0");
    return numerical_rank(eig_hermitian(a).eigenvalues, rank_tol);
}

/// Orthonormal basis (columns) of the span of eigenvectors above the rank threshold.
inline ComplexMatrix support_basis(const EigDecomposition& e, double rank_tol = kDefaultRankTol) {
    const double thr = rank_threshold(e.eigenvalues, rank_tol);
    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
        if (e.eigenvalues[i] > thr) cols.push_back(i);
    ComplexMatrix v(e.eigenvectors.rows(), Eigen::Index(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) v.col(Eigen::Index(c)) = e.eigenvectors.col(cols[c]);
    return v;
}

/// Frobenius-nearest PSD matrix: negative eigenvalues clipped to zero.
inline HermitianMatrix psd_project(const HermitianMatrix& a) {
    auto e = eig_hermitian(a);
    e.eigenvalues = e.eigenvalues.cwiseMax(0.0);
    return HermitianMatrix(e.reconstruct());
}

inline double min_eigenvalue(const HermitianMatrix& a) {
    if (a.dim() == 0) return 0.0;
    return eig_hermitian(a).eigenvalues[0];
}

/// Tr(A^dagger B)
inline Complex frobenius_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch("frobenius_inner: shapes " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + " differ");
    return (a.adjoint() * b).trace();
}

inline double frobenius_inner(const HermitianMatrix& a, const HermitianMatrix& b) {
    return frobenius_inner(a.matrix(), b.matrix()).real();
}

// Real coordinates of Hermitian n x n matrices in an orthonormal basis:
// the n diagonal entries, then for each j < k the pair
// sqrt(2) Re A(j,k), sqrt(2) Im A(j,k). The map is an isometry from the
// Frobenius inner product onto the Euclidean one.
namespace coords {

inline std::size_t size(std::size_t n) { return n * n; }

inline RealVector from_matrix(const ComplexMatrix& a) {
    const Eigen::Index n = a.rows();
    RealVector x(n * n);
    Eigen::Index p = 0;
    for (Eigen::Index j = 0; j < n; ++j) x[p++] = a(j, j).real();
    const double s = std::sqrt(2.0);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j + 1; k < n; ++k) {
            // symmetrize on the fly so non-Hermitian inputs give the coordinates of their Hermitian part
            const Complex v = 0.5 * (a(j, k) + std::conj(a(k, j)));
            x[p++] = s * v.real();
            x[p++] = s * v.imag();
        }
    return x;
}

inline RealVector from_matrix(const HermitianMatrix& a) { return from_matrix(a.matrix()); }

inline ComplexMatrix to_matrix(const RealVector& x, std::size_t n_) {
    const auto n = Eigen::Index(n_);
    if (x.size() != n * n) throw DimensionMismatch("coords::to_matrix: length mismatch");
    ComplexMatrix a(n, n);
    Eigen::Index p = 0;
    for (Eigen::Index j = 0; j < n; ++j) a(j, j) = x[p++];
    const double s = 1.0 / std::sqrt(2.0);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j + 1; k < n; ++k) {
            const Complex v(s * x[p], s * x[p + 1]);
            p += 2;
            a(j, k) = v;
            a(k, j) = std::conj(v);
        }
    return a;
}

inline HermitianMatrix to_hermitian(const RealVector& x, std::size_t n) { return HermitianMatrix(to_matrix(x, n)); }

/// m-th element of the orthonormal Hermitian basis underlying the coordinates.
inline ComplexMatrix basis_element(std::size_t n, std::size_t m) {
    RealVector e = RealVector::Zero(Eigen::Index(n * n));
    e[Eigen::Index(m)] = 1.0;
    return to_matrix(e, n);
}

} // namespace coords

} // namespace qmarginal
