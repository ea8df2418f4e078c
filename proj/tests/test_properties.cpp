#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "corpus.hpp"
#include "ergokit/bd_criteria.hpp"
#include "ergokit/bd_spectral.hpp"
#include "ergokit/diffusion.hpp"

using namespace ergokit;

namespace {

struct ChainCase {
    std::unique_ptr<MuLadder> ladder;
    OracleResult l0, l1;
};

struct DiffusionCase {
    std::unique_ptr<DiffusionAnalysis> analysis;
    double cutoff;
    OracleResult l0, l1;
};

const std::vector<ChainCase>& chain_cases() {
    static const std::vector<ChainCase> v = [] {
        std::vector<ChainCase> out;
        for (const auto& s : corpus::chains()) {
            ChainCase c;
            c.ladder = std::make_unique<MuLadder>(corpus::chain(s));
            c.l0 = truncated_gap_oracle(c.ladder->model(), 4096, Boundary::Absorbing);
            c.l1 = truncated_gap_oracle(c.ladder->model(), 4096, Boundary::Reflecting);
            out.push_back(std::move(c));
        }
        return out;
    }();
    return v;
}

const std::vector<DiffusionCase>& diffusion_cases() {
    static const std::vector<DiffusionCase> v = [] {
        std::vector<DiffusionCase> out;
        for (const auto& s : corpus::diffusions()) {
            DiffusionCase c;
            c.analysis = std::make_unique<DiffusionAnalysis>(corpus::diffusion(s));
            c.cutoff = oracle_cutoff(*c.analysis);
            c.l0 = fd_gap_oracle(*c.analysis, c.cutoff, 4096, Gap::Lambda0);
            c.l1 = fd_gap_oracle(*c.analysis, c.cutoff, 4096, Gap::Lambda1);
            out.push_back(std::move(c));
        }
        return out;
    }();
    return v;
}

std::string name_of(const ChainCase& c) { return c.ladder->model().name; }
std::string name_of(const DiffusionCase& c) { return c.analysis->model().name; }

std::string num(double x) {
    std::ostringstream s;
    s.precision(6);
    s << x;
    return s.str();
}

void expect_ordered(const VerdictTable& t, const std::string& label) {
    for (auto [s, w] : contradictions(t))
        ADD_FAILURE() << label << ": " << property_name(s) << " holds but " << property_name(w) << " fails";
}

}  // namespace

TEST(CorpusSize, EnoughModels) {
    EXPECT_GE(corpus::chains().size(), 10u);
    EXPECT_GE(corpus::diffusions().size(), 10u);
}

// every admissible test function gives a lower bound on lambda_0
TEST(VariationalSoundness, Chains) {
    const std::vector<std::pair<std::string, std::function<double(std::size_t)>>> seqs = {
        {"sqrt", [](std::size_t i) { return std::sqrt(double(i)); }},
        {"linear", [](std::size_t i) { return double(i); }},
        {"quadratic", [](std::size_t i) { return double(i) * double(i); }},
        {"log", [](std::size_t i) { return std::log1p(double(i)); }},
        {"saturating", [](std::size_t i) { return double(i) / (double(i) + 10.0); }},
    };
    for (const auto& c : chain_cases()) {
        SCOPED_TRACE(name_of(c));
        const double cap = c.l0.value * 1.03;
        VariationalBound rep = representative_lower_bd(*c.ladder);
        ASSERT_FALSE(rep.vacuous);
        EXPECT_GT(rep.value, 0.0);
        EXPECT_LE(rep.value, cap) << "representative " << num(rep.value) << " vs oracle " << num(c.l0.value);
        for (const auto& [label, w] : seqs) {
            VariationalBound b = variational_lower_bd(*c.ladder, w, 1000);
            if (b.vacuous) continue;
            EXPECT_LE(b.value, cap) << label << " " << num(b.value) << " vs oracle " << num(c.l0.value);
        }
    }
}

TEST(VariationalSoundness, Diffusions) {
    const std::vector<std::pair<std::string, std::function<double(double)>>> fns = {
        {"linear", [](double x) { return x; }},
        {"sqrt", [](double x) { return std::sqrt(x); }},
        {"log", [](double x) { return std::log1p(x); }},
        {"saturating", [](double x) { return x / (1.0 + x); }},
    };
    for (const auto& c : diffusion_cases()) {
        SCOPED_TRACE(name_of(c));
        const double cap = c.l0.value * 1.03;
        DiffVariationalBound rep = representative_lower_diff(*c.analysis);
        ASSERT_FALSE(rep.vacuous);
        EXPECT_GT(rep.value, 0.0);
        EXPECT_LE(rep.value, cap) << "representative " << num(rep.value) << " vs oracle " << num(c.l0.value);
        for (const auto& [label, f] : fns) {
            DiffVariationalBound b = variational_lower_diff(*c.analysis, f);
            if (b.vacuous) continue;
            EXPECT_LE(b.value, cap) << label << " " << num(b.value) << " vs oracle " << num(c.l0.value);
        }
    }
}

TEST(Bracketing, ChainsAbsorbingGap) {
    for (const auto& c : chain_cases()) {
        SCOPED_TRACE(name_of(c));
        GapEstimate g = gap_bounds_bd(*c.ladder);
        ASSERT_EQ(g.status, GapStatus::Finite);
        // truncation only raises lambda_0; gamma = 2 converges slowly from above
        EXPECT_LT(c.l0.error, 0.05 * c.l0.value);
        EXPECT_GE(c.l0.value, 0.95 * g.lower);
        EXPECT_LE(c.l0.value - c.l0.error, 1.05 * g.upper);
        // lambda_1 >= lambda_0, so the lower end holds for both
        EXPECT_GE(c.l1.value, 0.95 * g.lower);
        EXPECT_GE(c.l1.value, c.l0.value * (1 - 1e-6));
    }
}

TEST(Bracketing, DiffusionsAbsorbingGap) {
    for (const auto& c : diffusion_cases()) {
        SCOPED_TRACE(name_of(c));
        GapEstimate g = gap_bounds_diff(*c.analysis, Gap::Lambda0);
        ASSERT_EQ(g.status, GapStatus::Finite);
        EXPECT_LT(c.l0.error, 0.01 * c.l0.value);
        EXPECT_GE(c.l0.value, 0.95 * g.lower);
        EXPECT_LE(c.l0.value, 1.05 * g.upper);
    }
}

// for a reversible chain, D(f) / Var(f) >= lambda_1 for every non-constant f
TEST(Rayleigh, ChainQuotientDominatesTheGap) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& c : chain_cases()) {
        SCOPED_TRACE(name_of(c));
        const MuLadder& L = *c.ladder;
        const BirthDeathModel& m = L.model();
        const double log_Z = L.mass().log_quantity;
        const std::size_t N = 40;
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> f(N + 1);
            for (auto& x : f) x = u(rng);
            double m1 = 0, m2 = 0, D = 0;
            for (std::size_t i = 0; i <= 4000; ++i) {
                const double p = std::exp(L.log_mu(i) - log_Z);
                const double fi = f[std::min(i, N)];
                m1 += p * fi;
                m2 += p * fi * fi;
                if (i < N) D += p * m.birth_rate(i) * (f[i + 1] - f[i]) * (f[i + 1] - f[i]);
            }
            const double var = m2 - m1 * m1;
            if (var < 1e-12) continue;
            EXPECT_GE(D / var, c.l1.value * (1 - 1e-6)) << "trial " << trial;
        }
    }
}

TEST(Rayleigh, DiffusionQuotientDominatesTheGap) {
    const std::vector<std::function<double(double)>> fns = {
        [](double x) { return x; },
        [](double x) { return std::sqrt(1.0 + x); },
        [](double x) { return std::log1p(x); },
        [](double x) { return -std::expm1(-x); },
        [](double x) { return std::sin(x); },
    };
    for (const auto& c : diffusion_cases()) {
        SCOPED_TRACE(name_of(c));
        for (std::size_t k = 0; k < fns.size(); ++k) {
            const double var = variance(*c.analysis, fns[k]);
            if (var < 1e-10) continue;
            const double D = dirichlet_form(*c.analysis, fns[k]).value;
            EXPECT_GE(D / var, c.l1.value * (1 - 1e-3)) << "function " << k;
        }
    }
}

TEST(Muckenhoupt, EqualsDeltaOverMassAcrossCorpus) {
    for (const auto& c : diffusion_cases()) {
        SCOPED_TRACE(name_of(c));
        Verdict B = muckenhoupt_B(*c.analysis);
        ASSERT_TRUE(B.holds());
        const double expect = *delta_diff(*c.analysis).quantity() / *c.analysis->mass().quantity();
        EXPECT_NEAR(*B.quantity(), expect, 1e-5 * expect);
    }
}

TEST(KacKrein, MatchesDeltaWithoutDrift) {
    for (const char* a : {"(1 + x)^3", "(1 + x)^2.5", "(1 + x)^4", "1 + x^2", "2 + x^3"}) {
        SCOPED_TRACE(a);
        DiffusionAnalysis A(make_diffusion(a, "0"));
        Verdict k = kac_krein_delta(A);
        Verdict d = delta_diff(A);
        ASSERT_TRUE(k.holds());
        ASSERT_TRUE(d.holds());
        EXPECT_NEAR(*k.quantity(), *d.quantity(), 1e-6 * *d.quantity());
    }
}

TEST(LatticeConsistency, Corpus) {
    for (const auto& c : chain_cases()) {
        ClassificationReport r = classify(*c.ladder, 4.0);
        EXPECT_TRUE(r.consistent()) << name_of(c);
        expect_ordered(r.rows, name_of(c));
    }
    for (const auto& c : diffusion_cases()) {
        DiffusionReport r = criteria_diff(*c.analysis, 4.0);
        EXPECT_TRUE(r.consistent()) << name_of(c);
        expect_ordered(r.rows, name_of(c));
    }
}

TEST(LatticeConsistency, RandomizedRateModels) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coef(0.5, 3.0), power(0.0, 3.5);
    int decided = 0;
    for (int it = 0; it < 100; ++it) {
        const double cb = coef(rng), ca = coef(rng), pb = power(rng), pa = power(rng);
        const std::string b = num(cb) + " * (n + 1)^" + num(pb);
        const std::string a = num(ca) + " * n^" + num(pa);
        const std::string label = "b = " + b + ", a = " + a;
        ClassificationReport r = classify(make_chain(cb, b, a), 4.0);
        EXPECT_TRUE(r.consistent()) << label;
        expect_ordered(r.rows, label);
        // Poincare row and gap bracket must agree
        MuLadder L(make_chain(cb, b, a));
        GapEstimate g = gap_bounds_bd(L);
        if (r.at(Property::Exponential).holds() && r.at(Property::Exponential).reason != Reason::Implied) {
            EXPECT_EQ(g.status, GapStatus::Finite) << label;
        }
        if (g.status == GapStatus::Finite) {
            EXPECT_FALSE(r.at(Property::Exponential).fails()) << label;
        }
        decided += !r.at(Property::Ergodicity).inconclusive();
    }
    EXPECT_GE(decided, 90);
}

TEST(LatticeConsistency, RandomizedDiffusions) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> coef(0.5, 2.0), qa(0.0, 2.0), pb(0.0, 3.0);
    for (int it = 0; it < 20; ++it) {
        const std::string a = num(coef(rng)) + " * (1 + x)^" + num(qa(rng));
        const std::string b = "-" + num(coef(rng)) + " * x^" + num(pb(rng));
        const std::string label = "a = " + a + ", b = " + b;
        DiffusionReport r = criteria_diff(make_diffusion(a, b), 4.0);
        EXPECT_TRUE(r.consistent()) << label;
        expect_ordered(r.rows, label);
    }
}
