#include "oracle.hpp"

#include "qmarginal/gallery.hpp"
#include "qmarginal/reduce.hpp"

#include <gtest/gtest.h>

using namespace qmarginal;

namespace {

void expect_trace_well_formed(const ReductionTrace& t) {
    std::size_t prev = t.initial_rank;
    for (const auto& s : t.steps) {
        EXPECT_EQ(s.rank_before, prev);
        EXPECT_LT(s.rank_after, s.rank_before);
        EXPECT_LE(std::abs(s.direction_trace), 1e-9);
        EXPECT_LE(s.direction_marginal, 1e-9);
        EXPECT_GT(s.lambda, 0.0);
        prev = s.rank_after;
    }
    EXPECT_EQ(t.final_rank, prev);
    EXPECT_FALSE(t.guarantee_violated);
}

} // namespace

TEST(DimensionGuarantee, Counting) {
    EXPECT_TRUE(dimension_guarantee(5, {2, 2, 2, 2}));
    EXPECT_FALSE(dimension_guarantee(4, {2, 2, 2, 2}));
    EXPECT_TRUE(dimension_guarantee(2, {}));
    EXPECT_FALSE(dimension_guarantee(1, {}));
}

TEST(DescentDirection, PostConditions) {
    const auto fi = random_feasible_instance(SystemShape::qubits(3), all_subsets(3, 2), 8, 31);
    const auto sys = fi.instance.system();
    DirectionDiagnostics diag;
    const auto h = descent_direction(fi.witness, sys, {}, &diag);
    ASSERT_TRUE(h.has_value());
    EXPECT_EQ(diag.support_rank, 8u);
    EXPECT_EQ(diag.kernel_dim, 27u);
    EXPECT_NEAR(h->norm(), 1.0, 1e-12);
    EXPECT_LE(std::abs(h->trace()), 1e-12);
    for (const auto& c : fi.instance.constraints())
        EXPECT_LE(oracle::partial_trace(h->matrix(), {2, 2, 2}, c.subsystems.indices()).norm(), 1e-9);
}

TEST(DescentDirection, StaysInSupport) {
    const auto fi = random_feasible_instance(SystemShape::qubits(3), {SubsystemSet{0}, SubsystemSet{2}}, 5, 8);
    const auto h = descent_direction(fi.witness, fi.instance);
    ASSERT_TRUE(h.has_value());
    const auto p = support_projector(fi.witness);
    EXPECT_LE((p.matrix() * h->matrix() * p.matrix() - h->matrix()).norm(), 1e-12);
}

TEST(DescentDirection, NoneForPureState) {
    ComplexVector v = ComplexVector::Zero(4);
    v[0] = 1.0;
    const auto rho = HermitianMatrix::projector(v);
    const ConsistencyInstance inst(SystemShape::qubits(2), {{SubsystemSet{0}, partial_trace(rho, SystemShape::qubits(2), SubsystemSet{0})}});
    EXPECT_FALSE(descent_direction(rho, inst).has_value());
}

TEST(DescentDirection, NoneWhenKernelTrivial) {
    // a single global constraint pins the state completely
    SeededRng rng(3);
    const auto rho = random_density(rng, 4, 4);
    const ConsistencyInstance inst(SystemShape::qubits(2), {{SubsystemSet{0, 1}, rho}});
    EXPECT_FALSE(descent_direction(rho, inst).has_value());
}

TEST(DescentDirection, RejectsInfeasibleState) {
    const auto inst = maximally_mixed_klocal_instance(3, 2);
    ComplexMatrix z = ComplexMatrix::Zero(8, 8);
    z(0, 0) = 1.0;
    EXPECT_THROW(descent_direction(HermitianMatrix(z), inst), PreconditionError);
}

TEST(DescentDirection, SeedDeterminism) {
    const auto inst = maximally_mixed_klocal_instance(3, 1);
    const auto rho = HermitianMatrix::maximally_mixed(8);
    ReductionOptions a;
    a.seed = 4;
    const auto h1 = descent_direction(rho, inst, a);
    const auto h2 = descent_direction(rho, inst, a);
    a.seed = 5;
    const auto h3 = descent_direction(rho, inst, a);
    ASSERT_TRUE(h1 && h2 && h3);
    EXPECT_EQ(h1->matrix(), h2->matrix());
    EXPECT_GT((h1->matrix() - h3->matrix()).norm(), 1e-3);
}

TEST(StepLength, MatchesBisectionOracle) {
    SeededRng rng(19);
    for (int trial = 0; trial < 5; ++trial) {
        const auto rho = random_density(rng, 6, 4);
        const auto v = support_basis(eig_hermitian(rho));
        ComplexMatrix y = random_hermitian(rng, 4).matrix();
        y -= (y.trace() / 4.0) * ComplexMatrix::Identity(4, 4);
        const HermitianMatrix h(ComplexMatrix(v * y * v.adjoint()));
        const auto sl = step_length(rho, h);
        const double want = oracle::max_step(rho.matrix(), double(sl.sign) * h.matrix());
        EXPECT_NEAR(sl.lambda, want, 1e-8 * want);
        const HermitianMatrix moved(rho.matrix() - double(sl.sign) * sl.lambda * h.matrix());
        EXPECT_GE(min_eigenvalue(moved), -1e-12);
        EXPECT_LT(numerical_rank(moved), 4u);
    }
}

TEST(StepLength, PrefersMoreDegenerateSide) {
    // rho = I/4, H = diag(1, 1, -1, -1) + diag(0,0,0,0): tie -> '+'; H = diag(1,-1/3,-1/3,-1/3): '-' side has 3
    const auto rho = HermitianMatrix::maximally_mixed(4);
    ComplexMatrix h = ComplexMatrix::Zero(4, 4);
    h(0, 0) = 1;
    h(1, 1) = 1;
    h(2, 2) = -1;
    h(3, 3) = -1;
    auto sl = step_length(rho, HermitianMatrix(h));
    EXPECT_EQ(sl.sign, +1);
    EXPECT_EQ(sl.multiplicity, 2u);
    EXPECT_NEAR(sl.lambda, 0.25, 1e-15);

    h.setZero();
    h(0, 0) = 1;
    h(1, 1) = h(2, 2) = h(3, 3) = -1.0 / 3.0;
    sl = step_length(rho, HermitianMatrix(h));
    EXPECT_EQ(sl.sign, -1);
    EXPECT_EQ(sl.multiplicity, 3u);
    EXPECT_NEAR(sl.lambda, 0.75, 1e-14);
}

TEST(StepLength, Preconditions) {
    const auto rho = HermitianMatrix::maximally_mixed(2);
    EXPECT_THROW(step_length(rho, HermitianMatrix::zero(2)), PreconditionError);
    EXPECT_THROW(step_length(rho, HermitianMatrix::identity(2)), PreconditionError);
    EXPECT_THROW(step_length(rho, HermitianMatrix::zero(3)), DimensionMismatch);
    ComplexMatrix p = ComplexMatrix::Zero(2, 2);
    p(0, 0) = 1.0;
    ComplexMatrix off = ComplexMatrix::Zero(2, 2);
    off(0, 1) = off(1, 0) = 1.0;
    EXPECT_THROW(step_length(HermitianMatrix(p), HermitianMatrix(off)), PreconditionError);
}

class RandomReduction : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomReduction, ReachesBoundWithExactMarginals) {
    const std::uint64_t seed = GetParam();
    const std::size_t n = 3 + seed % 2;
    const auto fi = random_feasible_instance(SystemShape::qubits(n), all_subsets(n, 2), std::size_t(1) << n, seed);
    const auto res = reduce_rank(fi.witness, fi.instance);
    EXPECT_TRUE(res.trace.within_bound()) << res.trace.final_rank << " > " << res.trace.bound;
    EXPECT_EQ(res.trace.bound, isqrt_floor(16 * n * (n - 1) / 2));
    EXPECT_EQ(numerical_rank(res.state), res.trace.final_rank);
    expect_trace_well_formed(res.trace);
    const auto shape = std::vector<std::size_t>(n, 2);
    for (const auto& c : fi.instance.constraints())
        EXPECT_LE((oracle::partial_trace(res.state.matrix(), shape, c.subsystems.indices()) - c.target.matrix()).norm(),
                  1e-8);
    EXPECT_NEAR(res.state.trace(), 1.0, 1e-12);
    EXPECT_GE(oracle::min_eig(res.state.matrix()), -1e-10);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomReduction, ::testing::Values(1u, 2u, 3u, 4u, 5u, 6u));

TEST(Reduce, MaximallyMixedFourQubits) {
    const auto inst = maximally_mixed_klocal_instance(4, 2);
    const auto res = reduce_rank(HermitianMatrix::maximally_mixed(16), inst);
    EXPECT_EQ(res.trace.initial_rank, 16u);
    EXPECT_LE(res.trace.final_rank, 9u);
    EXPECT_TRUE(res.trace.null_space_exhausted);
    EXPECT_LE(check_consistency(inst, res.state).worst(), 1e-8);
    expect_trace_well_formed(res.trace);
}

TEST(Reduce, NoConstraintsReachesPureState) {
    const ConsistencyInstance inst(SystemShape::qubits(2), {});
    const auto res = reduce_rank(HermitianMatrix::maximally_mixed(4), inst);
    EXPECT_EQ(res.trace.final_rank, 1u);
    EXPECT_EQ(res.trace.bound, 0u);
    EXPECT_EQ(res.trace.steps.size(), 3u);
}

TEST(Reduce, AlreadyAtBoundTakesNoStep) {
    ComplexVector v = ComplexVector::Zero(4);
    v[0] = v[3] = 1.0 / std::sqrt(2.0);
    const auto bell = HermitianMatrix::projector(v);
    const ConsistencyInstance inst(SystemShape::qubits(2), {{SubsystemSet{0, 1}, bell}});
    const auto res = reduce_rank(bell, inst);
    EXPECT_TRUE(res.trace.steps.empty());
    EXPECT_EQ(res.trace.final_rank, 1u);
}

TEST(Reduce, RejectsInfeasibleStart) {
    const auto inst = maximally_mixed_klocal_instance(2, 1);
    ComplexMatrix z = ComplexMatrix::Zero(4, 4);
    z(0, 0) = 1.0;
    EXPECT_THROW(reduce_rank(HermitianMatrix(z), inst), PreconditionError);
}

TEST(Reduce, Deterministic) {
    const auto fi = random_feasible_instance(SystemShape::qubits(3), all_subsets(3, 2), 8, 77);
    const auto a = reduce_rank(fi.witness, fi.instance);
    const auto b = reduce_rank(fi.witness, fi.instance);
    EXPECT_EQ(a.state.matrix(), b.state.matrix());
    EXPECT_EQ(a.trace.steps.size(), b.trace.steps.size());
}
