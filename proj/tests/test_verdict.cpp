#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "ergokit/lattice.hpp"
#include "ergokit/verdict.hpp"

using namespace ergokit;

TEST(Series, ConvergentSeriesHoldWithTheirSum) {
    Verdict v = series_verdict([](std::size_t n) { return 1.0 / (double(n) * double(n)); }, {}, 1);
    ASSERT_TRUE(v.holds());
    EXPECT_NEAR(*v.quantity(), std::numbers::pi * std::numbers::pi / 6.0, 1e-7);

    Verdict g = series_verdict([](std::size_t n) { return std::pow(0.5, double(n)); });
    ASSERT_TRUE(g.holds());
    EXPECT_NEAR(*g.quantity(), 2.0, 1e-12);

    // slowly convergent: sum 1/n^1.5 = zeta(1.5)
    Verdict s = series_verdict([](std::size_t n) { return std::pow(double(n), -1.5); }, {}, 1);
    ASSERT_TRUE(s.holds());
    EXPECT_NEAR(*s.quantity(), 2.6123753487, 1e-4);
}

TEST(Series, DivergentSeriesFail) {
    EXPECT_TRUE(series_verdict([](std::size_t n) { return 1.0 / double(n); }, {}, 1).fails());
    EXPECT_TRUE(series_verdict([](std::size_t) { return 1.0; }).fails());
    EXPECT_TRUE(series_verdict_log([](std::size_t n) { return double(n); }).fails());
}

TEST(Series, BorderlineLogSeriesIsNotHolds) {
    // sum 1/(n log^2 n) converges too slowly to be confirmed
    Verdict v = series_verdict([](std::size_t n) { return 1.0 / (double(n) * std::pow(std::log(double(n)), 2)); },
                               {}, 2);
    EXPECT_FALSE(v.fails());
}

TEST(Series, RejectsNegativeTerms) {
    EXPECT_THROW(series_verdict([](std::size_t) { return -1.0; }), DomainError);
    EXPECT_THROW(series_verdict_log([](std::size_t) { return std::nan(""); }), DomainError);
}

TEST(Sup, BoundedAndUnbounded) {
    Verdict b = sup_verdict([](std::size_t n) { return double(n) * std::exp(-double(n) / 10.0); });
    ASSERT_TRUE(b.holds());
    EXPECT_NEAR(*b.quantity(), 10.0 / std::exp(1.0), 1e-12);
    EXPECT_EQ(b.argmax, 10.0);

    Verdict c = sup_verdict([](std::size_t n) { return 1.0 - 1.0 / (1.0 + double(n)); });
    ASSERT_TRUE(c.holds());
    EXPECT_NEAR(*c.quantity(), 1.0, 1e-4);

    EXPECT_TRUE(sup_verdict([](std::size_t n) { return std::sqrt(double(n)); }).fails());
    EXPECT_TRUE(sup_verdict([](std::size_t n) { return std::log(1.0 + double(n)); }).fails());
}

TEST(Vanishing, ThreeWayDecision) {
    auto probes = [](std::initializer_list<double> v) {
        std::vector<Probe> p;
        double h = 1;
        for (double x : v) {
            p.push_back({h, std::log(x)});
            h *= 2;
        }
        return p;
    };
    EXPECT_TRUE(decide_vanishing(probes({1.0, 0.5, 0.25, 0.125})).holds());
    EXPECT_TRUE(decide_vanishing(probes({1e-5, 1e-6, 1e-7})).holds());
    EXPECT_TRUE(decide_vanishing(probes({1.0, 0.99, 0.985, 0.984})).fails());
    EXPECT_TRUE(decide_vanishing(probes({1.0, 0.8, 0.5, 0.45})).inconclusive());
    EXPECT_TRUE(decide_vanishing(probes({1.0, 0.5})).inconclusive());
}

TEST(BudgetTest, ScalingAndEnvironment) {
    Budget b;
    EXPECT_EQ(b.horizon(), 256u << 8);
    EXPECT_EQ(b.scaled(4).doublings, 10);
    EXPECT_EQ(b.scaled(0.25).doublings, 6);
    EXPECT_EQ(b.scaled(1e-9).doublings, 3);
    EXPECT_THROW(b.scaled(0), InvalidArgument);
    setenv("ERGOKIT_BUDGET", "2", 1);
    EXPECT_EQ(Budget::from_env().doublings, 9);
    setenv("ERGOKIT_BUDGET", "abc", 1);
    EXPECT_THROW(Budget::from_env(), InvalidArgument);
    unsetenv("ERGOKIT_BUDGET");
    EXPECT_EQ(Budget::from_env().doublings, 8);
}

namespace {

Verdict with(Outcome o) {
    Verdict v;
    v.outcome = o;
    return v;
}

}  // namespace

TEST(Lattice, ImplicationOrder) {
    EXPECT_TRUE(implies(Property::Strong, Property::Recurrence));
    EXPECT_TRUE(implies(Property::LogSobolev, Property::Exponential));
    EXPECT_TRUE(implies(Property::Nash, Property::Strong));
    EXPECT_FALSE(implies(Property::LogSobolev, Property::Strong));
    EXPECT_FALSE(implies(Property::Strong, Property::LogSobolev));
    EXPECT_FALSE(implies(Property::Strong, Property::DiscreteSpectrum));
    EXPECT_FALSE(implies(Property::Recurrence, Property::Ergodicity));
}

TEST(Lattice, ClosurePropagatesBothWays) {
    VerdictTable t;
    row(t, Property::Uniqueness) = with(Outcome::Inconclusive);
    row(t, Property::Recurrence) = with(Outcome::Inconclusive);
    row(t, Property::Ergodicity) = with(Outcome::Holds);
    row(t, Property::Exponential) = with(Outcome::Fails);
    row(t, Property::DiscreteSpectrum) = with(Outcome::Inconclusive);
    row(t, Property::LogSobolev) = with(Outcome::Inconclusive);
    row(t, Property::Strong) = with(Outcome::Inconclusive);
    ASSERT_TRUE(close_lattice(t));
    EXPECT_TRUE(row(t, Property::Uniqueness)->holds());
    EXPECT_EQ(row(t, Property::Recurrence)->reason, Reason::Implied);
    EXPECT_TRUE(row(t, Property::DiscreteSpectrum)->fails());
    EXPECT_TRUE(row(t, Property::LogSobolev)->fails());
    EXPECT_TRUE(row(t, Property::Strong)->fails());
}

TEST(Lattice, ContradictionsAreReportedNotClosed) {
    VerdictTable t;
    row(t, Property::Strong) = with(Outcome::Holds);
    row(t, Property::Ergodicity) = with(Outcome::Fails);
    row(t, Property::Recurrence) = with(Outcome::Inconclusive);
    auto c = contradictions(t);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].first, Property::Strong);
    EXPECT_EQ(c[0].second, Property::Ergodicity);
    EXPECT_FALSE(close_lattice(t));
    EXPECT_TRUE(row(t, Property::Recurrence)->inconclusive());
}

TEST(Lattice, LogSobolevAndStrongStayIndependent) {
    VerdictTable t;
    row(t, Property::LogSobolev) = with(Outcome::Holds);
    row(t, Property::Strong) = with(Outcome::Fails);
    EXPECT_TRUE(contradictions(t).empty());
    ASSERT_TRUE(close_lattice(t));
    EXPECT_TRUE(row(t, Property::LogSobolev)->holds());
}

TEST(Lattice, ConcurrentRowsLandInTheirSlots) {
    auto verdict = [](Outcome o, int ms) {
        return [o, ms] {
            std::this_thread::sleep_for(std::chrono::milliseconds(ms));
            Verdict v;
            v.outcome = o;
            return v;
        };
    };
    VerdictTable t = evaluate_rows({{Property::Strong, verdict(Outcome::Fails, 30)},
                                    {Property::Uniqueness, verdict(Outcome::Holds, 0)},
                                    {Property::Ergodicity, verdict(Outcome::Inconclusive, 10)}});
    EXPECT_TRUE(row(t, Property::Strong)->fails());
    EXPECT_TRUE(row(t, Property::Uniqueness)->holds());
    EXPECT_TRUE(row(t, Property::Ergodicity)->inconclusive());
    EXPECT_FALSE(row(t, Property::Recurrence).has_value());
    EXPECT_THROW(evaluate_rows({{Property::Nash, []() -> Verdict { throw InvalidArgument("bad row"); }}}),
                 InvalidArgument);
}
