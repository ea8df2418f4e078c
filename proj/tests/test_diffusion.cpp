#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ergokit/diffusion.hpp"

using namespace ergokit;

namespace {

// shared analyses; building the tables dominates the cost
const DiffusionAnalysis& ou() {
    static const DiffusionAnalysis A(make_diffusion("1", "-x", "ou"));
    return A;
}
const DiffusionAnalysis& drifted() {
    static const DiffusionAnalysis A(make_diffusion("1", "-2", "drifted"));
    return A;
}
const DiffusionAnalysis& bm() {
    static const DiffusionAnalysis A(make_diffusion("1", "0", "bm"));
    return A;
}

const double kSqrtHalfPi = std::sqrt(std::numbers::pi / 2.0);

}  // namespace

TEST(Scale, CIsTheDriftIntegral) {
    EXPECT_NEAR(C_of(drifted(), 2.0), -4.0, 1e-10);
    EXPECT_NEAR(C_of(drifted(), 3.0), -6.0, 1e-10);
    EXPECT_NEAR(C_of(ou(), 2.0), -2.0, 1e-10);
    EXPECT_NEAR(C_of(ou(), 10.0), -50.0, 1e-8);
    EXPECT_EQ(C_of(bm(), 5.0), 0.0);
    EXPECT_NEAR(ou().c_interp(3.3), -3.3 * 3.3 / 2.0, 1e-8);
}

TEST(Mass, ClosedForms) {
    ASSERT_TRUE(ou().mass().holds());
    EXPECT_NEAR(*ou().mass().quantity(), kSqrtHalfPi, 1e-8);
    EXPECT_NEAR(*drifted().mass().quantity(), 0.5, 1e-9);
    EXPECT_TRUE(bm().mass().fails());
    EXPECT_NEAR(*mu_xy(drifted(), 0.0, kInf).quantity(), 0.5, 1e-9);
    const double exact = kSqrtHalfPi * (std::erf(3.0 / std::sqrt(2.0)) - std::erf(1.0 / std::sqrt(2.0)));
    EXPECT_NEAR(*mu_xy(ou(), 1.0, 3.0).quantity(), exact, 1e-9);
    const double thin = kSqrtHalfPi * (std::erf(1.001 / std::sqrt(2.0)) - std::erf(1.0 / std::sqrt(2.0)));
    EXPECT_NEAR(*mu_xy(ou(), 1.0, 1.001).quantity(), thin, 1e-9 * thin);
    EXPECT_TRUE(mu_xy(bm(), 2.0, kInf).fails());
    EXPECT_THROW(mu_xy(ou(), 2.0, 1.0), InvalidArgument);
}

TEST(Criteria, OrnsteinUhlenbeck) {
    DiffusionReport r = criteria_diff(ou(), 3.0);
    EXPECT_TRUE(r.at(Property::Uniqueness).holds());
    EXPECT_TRUE(r.at(Property::Recurrence).holds());
    EXPECT_TRUE(r.at(Property::Ergodicity).holds());
    ASSERT_TRUE(r.at(Property::Exponential).holds());
    EXPECT_NEAR(*r.at(Property::Exponential).quantity(), 0.4788, 5e-4);
    EXPECT_TRUE(r.at(Property::DiscreteSpectrum).holds());
    EXPECT_TRUE(r.at(Property::LogSobolev).holds());
    EXPECT_TRUE(r.at(Property::Strong).fails());
    EXPECT_TRUE(r.consistent());
    const auto& flags = r.at(Property::Strong).flags;
    EXPECT_NE(std::find(flags.begin(), flags.end(), kConjectureFlag), flags.end());
}

TEST(Criteria, DriftedBrownianMotion) {
    Verdict d = delta_diff(drifted());
    ASSERT_TRUE(d.holds());
    EXPECT_NEAR(*d.quantity(), 0.25, 0.005 * 0.25);
    DiffusionReport r = criteria_diff(drifted());
    EXPECT_TRUE(r.at(Property::Exponential).holds());
    EXPECT_TRUE(r.at(Property::DiscreteSpectrum).fails());
    EXPECT_TRUE(r.at(Property::LogSobolev).fails());
    EXPECT_TRUE(r.at(Property::Strong).fails());
    EXPECT_NEAR(r.gap_l0.lower, 1.0, 0.01);
    EXPECT_NEAR(r.gap_l0.upper, 4.0, 0.04);
}

TEST(Criteria, ReflectedBrownianMotion) {
    DiffusionReport r = criteria_diff(bm());
    EXPECT_TRUE(r.at(Property::Recurrence).holds());
    EXPECT_TRUE(r.at(Property::Ergodicity).fails());
    EXPECT_TRUE(r.at(Property::Exponential).fails());
    EXPECT_TRUE(r.at(Property::Strong).fails());
    EXPECT_EQ(r.gap_l1.status, GapStatus::Infinite);
}

TEST(Criteria, StrongConfiningDrift) {
    DiffusionAnalysis A(make_diffusion("1", "-x^3"));
    DiffusionReport r = criteria_diff(A);
    EXPECT_TRUE(r.at(Property::DiscreteSpectrum).holds());
    EXPECT_TRUE(r.at(Property::LogSobolev).holds());
    EXPECT_TRUE(r.at(Property::Strong).holds());
    EXPECT_TRUE(r.consistent());
}

TEST(KacKrein, DriftlessModels) {
    DiffusionAnalysis cubic(make_diffusion("(1 + x)^3", "0"));
    Verdict k = kac_krein_delta(cubic);
    ASSERT_TRUE(k.holds());
    // sup_x x / (2 (1 + x)^2) = 1/8 at x = 1
    EXPECT_NEAR(*k.quantity(), 0.125, 1e-8);
    EXPECT_NEAR(k.argmax, 1.0, 1e-3);
    EXPECT_NEAR(*delta_diff(cubic).quantity(), *k.quantity(), 1e-8);

    DiffusionAnalysis quad(make_diffusion("(1 + x)^2", "0"));
    Verdict q = kac_krein_delta(quad);
    ASSERT_TRUE(q.holds());
    EXPECT_NEAR(*q.quantity(), 1.0, 1e-5);
    EXPECT_THROW(kac_krein_delta(ou()), InvalidArgument);
}

TEST(Muckenhoupt, EqualsDeltaOverMass) {
    for (const DiffusionAnalysis* A : {&ou(), &drifted()}) {
        Verdict B = muckenhoupt_B(*A);
        ASSERT_TRUE(B.holds());
        const double expect = *delta_diff(*A).quantity() / *A->mass().quantity();
        EXPECT_NEAR(*B.quantity(), expect, 1e-6 * expect);
    }
    EXPECT_NEAR(*muckenhoupt_B(drifted()).quantity(), 0.5, 1e-6);
}

TEST(Variational, LinearTestFunctionOnOU) {
    DiffVariationalBound b = variational_lower_diff(ou(), [](double x) { return x; });
    EXPECT_FALSE(b.vacuous);
    EXPECT_NEAR(b.value, 1.0, 0.01);
}

TEST(Variational, RepresentativeFunction) {
    auto f = representative_f(drifted());
    EXPECT_NEAR(f(std::log(2.0)), std::sqrt(1.5), 1e-7);
    EXPECT_EQ(f(0.0), 0.0);
    DiffVariationalBound b = representative_lower_diff(drifted());
    EXPECT_NEAR(b.value, 1.0, 1e-3);
    DiffVariationalBound o = representative_lower_diff(ou());
    EXPECT_GE(o.value, 0.25 / *delta_diff(ou()).quantity());
    EXPECT_LE(o.value, 1.0);
    // the linear-domain path refuses a function that overflows
    EXPECT_THROW(variational_lower_diff(drifted(), representative_f(drifted())), InvalidArgument);
}

TEST(Variational, Preconditions) {
    EXPECT_THROW(variational_lower_diff(bm(), [](double x) { return x; }), InvalidArgument);
    EXPECT_THROW(variational_lower_diff(ou(), [](double x) { return x; }, {1.0, 0.5}), InvalidArgument);
}

TEST(Rayleigh, DirichletFormAndVariance) {
    auto id = [](double x) { return x; };
    EXPECT_NEAR(dirichlet_form(ou(), id).value, 1.0, 1e-7);
    EXPECT_NEAR(variance(ou(), id), 1.0 - 2.0 / std::numbers::pi, 1e-7);
    EXPECT_NEAR(dirichlet_form(ou(), [](double) { return 3.0; }).value, 0.0, 1e-12);
    // for drifted BM, pi = Exp(2): var(x) = 1/4, D(x) = 1
    EXPECT_NEAR(variance(drifted(), id), 0.25, 1e-7);
    EXPECT_NEAR(dirichlet_form(drifted(), id).value, 1.0, 1e-7);
}

TEST(Oracle, OrnsteinUhlenbeckEigenvalues) {
    OracleResult l0 = fd_gap_oracle(ou(), 8.0, 2048, Gap::Lambda0);
    EXPECT_NEAR(l0.value, 1.0, 1e-4);
    OracleResult l1 = fd_gap_oracle(ou(), 8.0, 2048, Gap::Lambda1);
    EXPECT_NEAR(l1.value, 2.0, 1e-4);
    GapEstimate g = gap_bounds_diff(ou(), Gap::Lambda0);
    EXPECT_LE(g.lower, l0.value);
    EXPECT_GE(g.upper, l0.value);
}

TEST(Oracle, DriftedBrownianMotion) {
    const double L = oracle_cutoff(drifted());
    EXPECT_EQ(L, 64.0);
    OracleResult l1 = fd_gap_oracle(drifted(), L, 4096, Gap::Lambda1);
    EXPECT_NEAR(l1.value, 1.0, 0.02);
    EXPECT_THROW(fd_gap_oracle(drifted(), 5.0, 4096, Gap::Lambda1), InvalidArgument);
    EXPECT_THROW(fd_gap_oracle(drifted(), L, 32, Gap::Lambda1), InvalidArgument);
    EXPECT_THROW(fd_gap_oracle(bm(), 10.0, 128, Gap::Lambda1), InvalidArgument);
}

TEST(Grid, BudgetControlsTheRange) {
    Budget b;
    EXPECT_EQ(DiffusionGrid::from_budget(b).max_exp, 20);
    EXPECT_EQ(DiffusionGrid::from_budget(b.scaled(4)).max_exp, 22);
    DiffusionAnalysis small(make_diffusion("1", "-x"), Budget{256, 4});
    EXPECT_EQ(small.x_max(), std::ldexp(1.0, 16));
    EXPECT_NEAR(*small.mass().quantity(), kSqrtHalfPi, 1e-8);
}

TEST(Errors, BadCoefficientsSurfaceAsModelErrors) {
    EXPECT_THROW(DiffusionAnalysis(make_diffusion("x - 1", "0")).tables(), ModelError);
}
