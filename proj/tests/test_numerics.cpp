#include "qmarginal/numerics.hpp"
#include "qmarginal/random.hpp"

#include <gtest/gtest.h>

using namespace qmarginal;

TEST(HermitianMatrix, RejectsNonSquare) {
    EXPECT_THROW(HermitianMatrix(ComplexMatrix::Zero(2, 3)), DimensionMismatch);
}

TEST(HermitianMatrix, RejectsSkewPart) {
    ComplexMatrix a = ComplexMatrix::Zero(2, 2);
    a(0, 1) = 1.0;
    EXPECT_THROW(HermitianMatrix{a}, InvalidInput);
}

TEST(HermitianMatrix, RejectsNonFinite) {
    ComplexMatrix a = ComplexMatrix::Identity(2, 2);
    a(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(HermitianMatrix{a}, InvalidInput);
}

TEST(HermitianMatrix, SymmetrizesWithinTolerance) {
    ComplexMatrix a = ComplexMatrix::Identity(2, 2);
    a(0, 1) = Complex(0.5, 1e-12);
    a(1, 0) = Complex(0.5, 0.0);
    const HermitianMatrix h(a);
    EXPECT_EQ(h(0, 1), std::conj(h(1, 0)));
}

TEST(HermitianMatrix, Factories) {
    EXPECT_DOUBLE_EQ(HermitianMatrix::maximally_mixed(4).trace(), 1.0);
    EXPECT_DOUBLE_EQ(HermitianMatrix::identity(3).trace(), 3.0);
    ComplexVector v(2);
    v << 1.0, Complex(0, 1);
    const auto p = HermitianMatrix::projector(v / std::sqrt(2.0));
    EXPECT_NEAR((p.matrix() * p.matrix() - p.matrix()).norm(), 0.0, 1e-15);
}

class EigReconstruction : public ::testing::TestWithParam<int> {};

TEST_P(EigReconstruction, RelativeErrorBelow1e10) {
    SeededRng rng{static_cast<std::uint64_t>(GetParam())};
    const auto h = random_hermitian(rng, std::size_t(GetParam()));
    const auto e = eig_hermitian(h);
    EXPECT_LE((e.reconstruct() - h.matrix()).norm(), 1e-10 * h.norm());
    const auto n = e.eigenvectors.cols();
    EXPECT_LE((e.eigenvectors.adjoint() * e.eigenvectors - ComplexMatrix::Identity(n, n)).norm(), 1e-12);
    for (Eigen::Index i = 1; i < e.eigenvalues.size(); ++i) EXPECT_LE(e.eigenvalues[i - 1], e.eigenvalues[i]);
}

INSTANTIATE_TEST_SUITE_P(Sizes, EigReconstruction, ::testing::Values(1, 2, 3, 8, 17, 32, 64));

TEST(Eig, DiagonalSpectrumIsExact) {
    ComplexMatrix d = ComplexMatrix::Zero(3, 3);
    d(0, 0) = 3;
    d(1, 1) = -1;
    d(2, 2) = 2;
    const auto e = eig_hermitian(HermitianMatrix(d));
    EXPECT_DOUBLE_EQ(e.eigenvalues[0], -1);
    EXPECT_DOUBLE_EQ(e.eigenvalues[1], 2);
    EXPECT_DOUBLE_EQ(e.eigenvalues[2], 3);
}

TEST(NumericalRank, RelativeThreshold) {
    RealVector ev(4);
    ev << 1e-12, 1e-3, 0.5, 2.0;
    EXPECT_EQ(numerical_rank(ev, 1e-9), 3u);
    EXPECT_EQ(numerical_rank(ev, 1e-2), 2u);
    // the scale is max(1, max |lambda|), so tiny matrices are not inflated
    RealVector small(2);
    small << 1e-10, 1e-11;
    EXPECT_EQ(numerical_rank(small, 1e-9), 0u);
    EXPECT_THROW(numerical_rank(ev, -1.0), InvalidInput);
}

TEST(NumericalRank, RandomDensityHasRequestedRank) {
    SeededRng rng(5);
    for (std::size_t r : {1u, 3u, 7u, 12u}) EXPECT_EQ(numerical_rank(random_density(rng, 12, r)), r);
}

TEST(SupportBasis, SpansPositiveEigenspace) {
    SeededRng rng(9);
    const auto rho = random_density(rng, 6, 3);
    const auto v = support_basis(eig_hermitian(rho));
    ASSERT_EQ(v.cols(), 3);
    const ComplexMatrix p = v * v.adjoint();
    EXPECT_LE((p * rho.matrix() * p - rho.matrix()).norm(), 1e-13);
}

TEST(PsdProject, ClipsOnlyNegativePart) {
    SeededRng rng(11);
    const auto h = random_hermitian(rng, 10);
    const auto p = psd_project(h);
    const auto e = eig_hermitian(h);
    double neg = 0.0;
    for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
        if (e.eigenvalues[i] < 0) neg += e.eigenvalues[i] * e.eigenvalues[i];
    EXPECT_GE(min_eigenvalue(p), -1e-13);
    EXPECT_NEAR((h - p).norm(), std::sqrt(neg), 1e-12);
    // idempotent on the cone
    EXPECT_LE((psd_project(p) - p).norm(), 1e-12);
}

TEST(FrobeniusInner, MatchesTraceFormula) {
    SeededRng rng(2);
    const ComplexMatrix a = rng.ginibre(4, 4);
    const ComplexMatrix b = rng.ginibre(4, 4);
    Complex s = 0;
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) s += std::conj(a(i, j)) * b(i, j);
    EXPECT_NEAR(std::abs(frobenius_inner(a, b) - s), 0.0, 1e-13);
    EXPECT_THROW(frobenius_inner(a, ComplexMatrix::Zero(3, 3)), DimensionMismatch);
}

TEST(Coords, IsometryAndRoundTrip) {
    SeededRng rng(4);
    const auto a = random_hermitian(rng, 5);
    const auto b = random_hermitian(rng, 5);
    const RealVector xa = coords::from_matrix(a);
    const RealVector xb = coords::from_matrix(b);
    EXPECT_EQ(xa.size(), 25);
    EXPECT_NEAR(xa.dot(xb), frobenius_inner(a, b), 1e-13);
    EXPECT_LE((coords::to_matrix(xa, 5) - a.matrix()).norm(), 1e-14);
}

TEST(Coords, BasisIsOrthonormal) {
    const std::size_t n = 3;
    for (std::size_t m = 0; m < n * n; ++m)
        for (std::size_t l = 0; l < n * n; ++l) {
            const double ip = frobenius_inner(coords::basis_element(n, m), coords::basis_element(n, l)).real();
            EXPECT_NEAR(ip, m == l ? 1.0 : 0.0, 1e-15);
        }
}

TEST(Coords, LengthMismatch) { EXPECT_THROW(coords::to_matrix(RealVector::Zero(5), 2), DimensionMismatch); }

TEST(SeededRng, Deterministic) {
    SeededRng a(42);
    SeededRng b(42);
    EXPECT_EQ(a.ginibre(3, 3), b.ginibre(3, 3));
    const ComplexMatrix u = a.haar_unitary(5);
    EXPECT_LE((u.adjoint() * u - ComplexMatrix::Identity(5, 5)).norm(), 1e-13);
}
