#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "ergokit/ladder.hpp"

using namespace ergokit;

TEST(Ladder, GeometricQueue) {
    MuLadder L(make_chain(1, "1", "2"));
    const auto& t = L.tables();
    for (std::size_t n : {0u, 1u, 5u, 40u}) {
        EXPECT_NEAR(L.mu(n), std::pow(0.5, double(n)), 1e-15 * std::pow(0.5, double(n)));
        EXPECT_NEAR(std::exp(t.log_scale[n]), std::pow(2.0, double(n)), 1e-12 * std::pow(2.0, double(n)));
    }
    ASSERT_TRUE(L.mass().holds());
    EXPECT_NEAR(*L.mass().quantity(), 2.0, 1e-12);
    EXPECT_NEAR(L.tail(3), 0.25, 1e-14);
    EXPECT_NEAR(std::exp(L.log_tail(100)), std::pow(2.0, -99.0), 1e-12 * std::pow(2.0, -99.0));
    EXPECT_NEAR(L.mu_segment(1, 3), 0.875, 1e-15);
    // sum_{j<n} 2^j = 2^n - 1
    EXPECT_NEAR(std::exp(t.log_prefix_scale[10]), 1023.0, 1e-9);
    EXPECT_EQ(t.log_prefix_scale[0], -std::numeric_limits<double>::infinity());
}

TEST(Ladder, PowerFamily) {
    MuLadder L(make_chain(1, "n^3", "n^3"));
    EXPECT_DOUBLE_EQ(L.mu(0), 1.0);
    EXPECT_NEAR(L.mu(1), 1.0, 1e-15);
    EXPECT_NEAR(L.mu(10), 1e-3, 1e-15);
    EXPECT_NEAR(*L.mass().quantity(), 1.0 + 1.2020569031595942, 1e-8);
}

TEST(Ladder, DivergentMass) {
    MuLadder L(make_chain(1, "n", "n"));
    EXPECT_TRUE(L.mass().fails());
    EXPECT_THROW(L.log_tail(3), InvalidArgument);
}

TEST(Ladder, HugeWeightsStayInLogDomain) {
    MuLadder L(make_chain(1, "exp(n)", "1"));
    const auto& t = L.tables();
    // log mu_n = sum_{k<n} k
    EXPECT_NEAR(t.log_mu[2000], 1999.0 * 2000.0 / 2.0, 1e-6);
    EXPECT_THROW(L.mu(2000), RangeError);
    EXPECT_TRUE(L.mass().fails());
}

TEST(Ladder, BeyondHorizonOnDemand) {
    MuLadder L(make_chain(1, "1", "2"), Budget{256, 3});
    EXPECT_EQ(L.horizon(), 2048u);
    EXPECT_NEAR(L.log_mu(5000), -5000.0 * std::numbers::ln2, 1e-8);
    EXPECT_NEAR(L.log_mu(4000), -4000.0 * std::numbers::ln2, 1e-8);
    EXPECT_THROW(L.log_tail(5000), InvalidArgument);
}

TEST(Ladder, ConcurrentFirstAccess) {
    MuLadder L(make_chain(1, "n^2", "n^2"));
    std::vector<std::thread> pool;
    std::vector<double> seen(8);
    for (int k = 0; k < 8; ++k)
        pool.emplace_back([&, k] { seen[k] = L.log_mu(70000 + 10 * k) + 2.0 * std::log(70000.0 + 10 * k); });
    for (auto& th : pool) th.join();
    for (double v : seen) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Ladder, OverridesEnterTheWeights) {
    BirthDeathModel m = make_chain(1, "1", "2");
    m.death_override[1] = 4.0;
    MuLadder L(m);
    EXPECT_NEAR(L.mu(1), 0.25, 1e-15);
    EXPECT_NEAR(L.mu(2), 0.125, 1e-15);
}
