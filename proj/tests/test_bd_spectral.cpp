#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "ergokit/bd_spectral.hpp"

using namespace ergokit;

namespace {

const double kMM1Gap = (std::sqrt(2.0) - 1.0) * (std::sqrt(2.0) - 1.0);

}  // namespace

TEST(Truncation, TwoStateChain) {
    BirthDeathModel m = make_chain(1, "1", "2");
    EXPECT_NEAR(truncated_gap(m, 1, Boundary::Reflecting), 3.0, 1e-12);
    // absorbing: only state 1 remains, with total rate a_1 = 2
    EXPECT_NEAR(truncated_gap(m, 1, Boundary::Absorbing), 2.0, 1e-12);
}

TEST(Truncation, GeneratorShape) {
    BirthDeathModel m = make_chain(3, "n + 1", "2 * n");
    TridiagonalMatrix T = truncated_generator(m, 4, Boundary::Reflecting);
    ASSERT_EQ(T.size(), 5u);
    EXPECT_DOUBLE_EQ(T.diag[0], 3.0);
    EXPECT_DOUBLE_EQ(T.diag[1], 2.0 + 2.0);
    EXPECT_DOUBLE_EQ(T.diag[4], 8.0);
    EXPECT_DOUBLE_EQ(T.offdiag[0], -std::sqrt(3.0 * 2.0));
    TridiagonalMatrix D = truncated_generator(m, 4, Boundary::Absorbing);
    EXPECT_EQ(D.size(), 4u);
    EXPECT_THROW(truncated_generator(m, 0, Boundary::Reflecting), InvalidArgument);
}

TEST(Oracle, GeometricQueueGap) {
    BirthDeathModel m = make_chain(1, "1", "2");
    OracleResult r = truncated_gap_oracle(m, 4096);
    EXPECT_NEAR(r.value, kMM1Gap, 0.01 * kMM1Gap);
    EXPECT_LT(r.error, 1e-4);
    OracleResult a = truncated_gap_oracle(m, 4096, Boundary::Absorbing);
    EXPECT_NEAR(a.value, kMM1Gap, 0.01 * kMM1Gap);
}

TEST(GapBracket, GeometricQueue) {
    MuLadder L(make_chain(1, "1", "2"));
    GapEstimate g = gap_bounds_bd(L);
    ASSERT_EQ(g.status, GapStatus::Finite);
    EXPECT_NEAR(g.delta, 2.0, 1e-9);
    EXPECT_NEAR(g.lower, 0.125, 1e-9);
    EXPECT_NEAR(g.upper, 0.5, 1e-9);
    EXPECT_LE(g.lower, kMM1Gap);
    EXPECT_GE(g.upper, kMM1Gap);
}

TEST(GapBracket, NonErgodicChainHasZeroGap) {
    MuLadder L(make_chain(1, "n", "n"));
    GapEstimate g = gap_bounds_bd(L);
    EXPECT_EQ(g.status, GapStatus::Infinite);
    EXPECT_EQ(g.lower, 0.0);
    EXPECT_EQ(g.upper, 0.0);
}

TEST(Variational, RepresentativeSequenceIsNearlySharpForTheQueue) {
    MuLadder L(make_chain(1, "1", "2"));
    TestSequence w = representative_w(L, 10);
    ASSERT_TRUE(w.strictly_increasing());
    EXPECT_DOUBLE_EQ(w.w[0], 0.0);
    EXPECT_NEAR(w.w[3], std::sqrt(7.0), 1e-12);
    VariationalBound b = representative_lower_bd(L);
    EXPECT_FALSE(b.vacuous);
    EXPECT_LE(b.value, kMM1Gap * (1 + 1e-9));
    EXPECT_GE(b.value, 0.99 * kMM1Gap);
}

TEST(Variational, BoundsFromArbitrarySequences) {
    MuLadder L(make_chain(1, "n^3", "n^3"));
    const double oracle = truncated_gap_oracle(L.model(), 2048, Boundary::Absorbing).value;
    for (double p : {0.5, 1.0, 2.0}) {
        VariationalBound b =
            variational_lower_bd(L, [p](std::size_t i) { return std::pow(double(i), p); }, 1000);
        if (b.vacuous) continue;
        EXPECT_LE(b.value, oracle * 1.03) << p;
        EXPECT_GT(b.value, 0.0) << p;
    }
}

TEST(Variational, Preconditions) {
    MuLadder L(make_chain(1, "1", "2"));
    EXPECT_THROW(variational_lower_bd(L, [](std::size_t) { return 1.0; }, 10), InvalidArgument);
    EXPECT_THROW(variational_lower_bd(L, [](std::size_t i) { return double(i); }, 0), InvalidArgument);
    EXPECT_THROW(variational_lower_bd(L, [](std::size_t i) { return double(i); }, L.horizon()), InvalidArgument);
    TestSequence bad{{0.0, 2.0, 1.0}};
    EXPECT_THROW(variational_lower_bd(L, bad, 2), InvalidArgument);
    MuLadder null_rec(make_chain(1, "n", "n"));
    EXPECT_THROW(variational_lower_bd(null_rec, [](std::size_t i) { return double(i); }, 10), InvalidArgument);
    EXPECT_THROW(representative_w(L, 1), InvalidArgument);
}

TEST(Variational, GrowingSequenceCanBeVacuous) {
    // mu_j w_j does not decay: the tail sums diverge
    MuLadder L(make_chain(1, "1", "2"));
    VariationalBound b = variational_lower_bd(L, [](std::size_t i) { return std::pow(2.5, double(i)); }, 10);
    EXPECT_TRUE(b.vacuous);
}
