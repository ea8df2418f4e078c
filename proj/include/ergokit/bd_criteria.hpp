#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ergokit/errors.hpp"
#include "ergokit/ladder.hpp"
#include "ergokit/lattice.hpp"
#include "ergokit/logmath.hpp"
#include "ergokit/verdict.hpp"

namespace ergokit {

inline const std::string kNashCaveat = "(e): sufficient only, a small gap from being necessary";

namespace detail {

/// Maps a series verdict to a property that holds iff the series diverges.
inline Verdict holds_if_diverges(Verdict s) {
    if (s.holds()) {
        s.outcome = Outcome::Fails;
    } else if (s.fails()) {
        s.outcome = Outcome::Holds;
    }
    return s;
}

inline Verdict prerequisite(Outcome o, std::string note) {
    Verdict v;
    v.outcome = o;
    v.reason = Reason::Prerequisite;
    v.note = std::move(note);
    return v;
}

/// log sum_{n <= j < k} 1/(mu_j b_j).
inline double log_scale_between(const MuLadder::Tables& t, std::size_t n, std::size_t k) {
    return log_sub_exp(t.log_prefix_scale[k], t.log_prefix_scale[n]);
}

}  // namespace detail

/// sum_n mu[0,n] / (mu_n b_n) = inf.
inline Verdict uniqueness(const MuLadder& L) {
    const auto& t = L.tables();
    return detail::holds_if_diverges(
        series_verdict_log([&t](std::size_t n) { return t.log_scale[n] + t.log_prefix_mu[n]; }, L.budget()));
}

/// sum_n 1/(mu_n b_n) = inf.
inline Verdict recurrence(const MuLadder& L) {
    const auto& t = L.tables();
    return detail::holds_if_diverges(
        series_verdict_log([&t](std::size_t n) { return t.log_scale[n]; }, L.budget()));
}

/// Uniqueness together with mu[0, inf) < inf. Quantity: total mass.
inline Verdict ergodicity(const MuLadder& L) {
    const Verdict& mass = L.mass();
    if (mass.fails()) {
        Verdict v = mass;
        v.outcome = Outcome::Fails;
        v.note = "mu[0,inf) diverges";
        return v;
    }
    Verdict u = uniqueness(L);
    if (u.fails()) return detail::prerequisite(Outcome::Fails, "process not unique");
    if (mass.inconclusive() || u.inconclusive()) {
        Verdict v = mass;
        v.outcome = Outcome::Inconclusive;
        v.note = mass.inconclusive() ? "total mass undecided" : "uniqueness undecided";
        return v;
    }
    Verdict v = mass;
    v.outcome = Outcome::Holds;
    return v;
}

/// The delta quantity sup_{n>=1} mu[n,inf) sum_{j<n} 1/(mu_j b_j) as a sup verdict.
/// Holds = finite. Requires finite mass; Fails when the mass diverges.
inline Verdict delta_verdict(const MuLadder& L) {
    const Verdict& mass = L.mass();
    if (mass.fails()) return detail::prerequisite(Outcome::Fails, "mu[0,inf) diverges");
    if (mass.inconclusive()) return detail::prerequisite(Outcome::Inconclusive, "total mass undecided");
    const auto& t = L.tables();
    return sup_verdict_log([&t](std::size_t n) { return t.log_tail[n] + t.log_prefix_scale[n]; }, L.budget(), 1);
}

/// sup_{n>=1} mu[n,inf) sum_{j<n} 1/(mu_j b_j) < inf (with uniqueness). Quantity: delta.
inline Verdict exponential_ergodicity(const MuLadder& L) {
    Verdict d = delta_verdict(L);
    if (!d.holds()) return d;
    Verdict u = uniqueness(L);
    if (u.fails()) return detail::prerequisite(Outcome::Fails, "process not unique");
    if (u.inconclusive()) {
        d.outcome = Outcome::Inconclusive;
        d.note = "uniqueness undecided";
    }
    return d;
}

/// lim_n sup_{k>n} mu[k,inf) sum_{n<=j<k} 1/(mu_j b_j) = 0, probed at n = 1, 2, 4, ...
/// up to horizon/64.
inline Verdict discrete_spectrum(const MuLadder& L) {
    const Verdict& mass = L.mass();
    if (mass.fails()) return detail::prerequisite(Outcome::Fails, "mu[0,inf) diverges");
    if (mass.inconclusive()) return detail::prerequisite(Outcome::Inconclusive, "total mass undecided");
    const auto& t = L.tables();
    const std::size_t H = t.horizon;
    std::vector<Probe> probes;
    for (std::size_t n = 1; n <= H / 64; n *= 2) {
        double best = kNegInf;
        for (std::size_t k = n + 1; k <= H; ++k)
            best = std::max(best, t.log_tail[k] + detail::log_scale_between(t, n, k));
        probes.push_back({static_cast<double>(n), best});
    }
    return decide_vanishing(std::move(probes));
}

/// sup_n mu[n,inf) log(1/mu[n,inf)) sum_{j<n} 1/(mu_j b_j) < inf.
/// Indices with mu[n,inf) >= 1 are skipped.
inline Verdict log_sobolev(const MuLadder& L) {
    const Verdict& mass = L.mass();
    if (mass.fails()) return detail::prerequisite(Outcome::Fails, "mu[0,inf) diverges");
    if (mass.inconclusive()) return detail::prerequisite(Outcome::Inconclusive, "total mass undecided");
    const auto& t = L.tables();
    return sup_verdict_log(
        [&t](std::size_t n) {
            const double lt = t.log_tail[n];
            if (!(lt < 0.0)) return kNegInf;
            return lt + std::log(-lt) + t.log_prefix_scale[n];
        },
        L.budget(), 1);
}

/// S = sum_{n>=1} mu_n sum_{j<n} 1/(mu_j b_j) < inf. Quantity: S.
inline Verdict strong_ergodicity(const MuLadder& L) {
    const auto& t = L.tables();
    return series_verdict_log([&t](std::size_t n) { return t.log_mu[n] + t.log_prefix_scale[n]; }, L.budget(), 1);
}

/// The second form of S: sum_{n>=0} mu[n+1,inf) / (mu_n b_n). Requires finite mass.
inline Verdict strong_ergodicity_dual(const MuLadder& L) {
    const Verdict& mass = L.mass();
    if (!mass.holds()) return detail::prerequisite(mass.outcome, "total mass not finite");
    const auto& t = L.tables();
    return series_verdict_log([&t](std::size_t n) { return t.log_scale[n] + t.log_tail[n + 1]; }, L.budget());
}

/// sup_n mu[n,inf)^{(nu-2)/nu} sum_{j<n} 1/(mu_j b_j) < inf, nu > 2.
inline Verdict nash(const MuLadder& L, double nu) {
    if (!(nu > 2.0) || !std::isfinite(nu)) throw InvalidArgument("Nash criterion needs nu > 2");
    Verdict v;
    const Verdict& mass = L.mass();
    if (mass.fails()) {
        v = detail::prerequisite(Outcome::Fails, "mu[0,inf) diverges");
    } else if (mass.inconclusive()) {
        v = detail::prerequisite(Outcome::Inconclusive, "total mass undecided");
    } else {
        const auto& t = L.tables();
        const double e = (nu - 2.0) / nu;
        v = sup_verdict_log([&t, e](std::size_t n) { return e * t.log_tail[n] + t.log_prefix_scale[n]; }, L.budget(),
                            1);
    }
    v.flags.push_back(kNashCaveat);
    return v;
}

/// E_i sigma_0 for H = {0}: either a finite value, infinite, or undecided.
struct HittingTime {
    Outcome status = Outcome::Inconclusive;  // Holds: finite value; Fails: diverged
    double value = std::numeric_limits<double>::infinity();
    bool finite() const { return status == Outcome::Holds; }
};

/// E_k sigma_0 = sum_{m=1}^{k} mu[m,inf) / (mu_m a_m) for k = 0..upto (entry 0 is 0).
inline std::vector<HittingTime> mean_hitting_times(const MuLadder& L, std::size_t upto) {
    std::vector<HittingTime> out(upto + 1);
    out[0] = {Outcome::Holds, 0.0};
    const Verdict& mass = L.mass();
    if (!mass.holds()) {
        for (std::size_t i = 1; i <= upto; ++i) out[i].status = mass.fails() ? Outcome::Fails : Outcome::Inconclusive;
        return out;
    }
    if (upto > L.horizon()) throw InvalidArgument("hitting time index beyond ladder horizon");
    const auto& t = L.tables();
    double acc = 0.0;
    for (std::size_t m = 1; m <= upto; ++m) {
        double term;
        if (!std::isnan(t.mu[m])) {
            term = L.tail(m) / (t.mu[m] * L.model().death_rate(m));
        } else {
            term = std::exp(t.log_tail[m] - t.log_mu[m] - t.log_a[m]);
        }
        acc += term;
        out[m] = {Outcome::Holds, acc};
    }
    return out;
}

inline HittingTime mean_hitting_time(const MuLadder& L, std::size_t i) {
    if (i < 1) throw InvalidArgument("mean hitting time needs i >= 1");
    return mean_hitting_times(L, i)[i];
}

/// Result of checking a test sequence against the drift systems up to a horizon.
struct TestSequenceCheck {
    Verdict verdict;
    std::size_t horizon = 0;
    double max_residual = -std::numeric_limits<double>::infinity();  // max of lhs - rhs over i not in H
    double max_abs_residual = 0.0;
    std::optional<std::size_t> first_violation;
    std::vector<double> residuals;  // index i -> lhs - rhs (NaN for i in H)
};

/// Checks sum_j q_ij y_j <= -lambda y_i - 1 for i not in H, i <= N, and that
/// sum_{i in H} sum_{j != i} q_ij y_j is finite. lambda = 0 is the ergodicity
/// system; lambda > 0 the exponential one, which requires lambda < q_i.
inline TestSequenceCheck verify_test_sequence(const BirthDeathModel& m, const std::function<double(std::size_t)>& y,
                                              double lambda, const std::set<std::size_t>& H, std::size_t N) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
    if (H.empty()) throw InvalidArgument("H must be a nonempty finite set");
    TestSequenceCheck out;
    out.horizon = N;
    std::vector<double> ys(N + 2);
    for (std::size_t i = 0; i <= N + 1; ++i) {
        ys[i] = y(i);
        if (!(ys[i] >= 0.0) || !std::isfinite(ys[i]))
            throw InvalidArgument("test sequence must be nonnegative and finite (index " + std::to_string(i) + ")");
    }
    for (std::size_t i = 0; i <= N; ++i) {
        const double b = m.birth_rate(i);
        const double a = i == 0 ? 0.0 : m.death_rate(i);
        if (lambda > 0.0 && !(lambda < a + b))
            throw InvalidArgument("lambda must be below q_i = a_i + b_i for all i (violated at i=" + std::to_string(i) +
                                  ")");
    }
    out.residuals.assign(N + 1, std::numeric_limits<double>::quiet_NaN());
    bool ok = true;
    double boundary = 0.0;
    for (std::size_t i = 0; i <= N; ++i) {
        const double b = m.birth_rate(i);
        const double a = i == 0 ? 0.0 : m.death_rate(i);
        if (H.count(i)) {
            if (!H.count(i + 1)) boundary += b * ys[i + 1];
            if (i > 0 && !H.count(i - 1)) boundary += a * ys[i - 1];
            continue;
        }
        const double down = i == 0 ? 0.0 : a * (ys[i] - ys[i - 1]);
        const double lhs = b * (ys[i + 1] - ys[i]) - down;
        const double rhs = -lambda * ys[i] - 1.0;
        const double r = lhs - rhs;
        out.residuals[i] = r;
        out.max_residual = std::max(out.max_residual, r);
        out.max_abs_residual = std::max(out.max_abs_residual, std::fabs(r));
        const double scale = 1.0 + b * (ys[i + 1] + ys[i]) + a * (ys[i] + (i ? ys[i - 1] : 0.0)) + lambda * ys[i];
        if (r > 1e-12 * scale && ok) {
            ok = false;
            out.first_violation = i;
        }
    }
    Verdict& v = out.verdict;
    v.reason = Reason::Horizon;
    v.set_quantity(out.max_abs_residual > 0 ? std::log(out.max_abs_residual) : kNegInf);
    if (!std::isfinite(boundary)) {
        v.outcome = Outcome::Fails;
        v.note = "boundary sum over H is not finite";
    } else if (!ok) {
        v.outcome = Outcome::Fails;
        v.note = "violated at i=" + std::to_string(*out.first_violation);
    } else {
        v.outcome = Outcome::Holds;
        v.note = "verified for i <= " + std::to_string(N) + " only";
    }
    return out;
}

/// Per-property verdicts for a chain, with implication closure.
struct ClassificationReport {
    VerdictTable rows;
    std::optional<double> nu;
    bool lattice_closure_applied = false;
    std::vector<std::pair<Property, Property>> contradictions;
    std::vector<std::string> notes;

    const Verdict& at(Property p) const {
        const auto& r = row(rows, p);
        if (!r) throw InvalidArgument("property not evaluated: " + std::string(property_name(p)));
        return *r;
    }
    bool consistent() const { return contradictions.empty(); }
};

inline ClassificationReport classify(const MuLadder& L, std::optional<double> nu = std::nullopt) {
    ClassificationReport rep;
    rep.nu = nu;
    std::vector<RowTask> tasks = {
        {Property::Uniqueness, [&L] { return uniqueness(L); }},
        {Property::Recurrence, [&L] { return recurrence(L); }},
        {Property::Ergodicity, [&L] { return ergodicity(L); }},
        {Property::Exponential, [&L] { return exponential_ergodicity(L); }},
        {Property::DiscreteSpectrum, [&L] { return discrete_spectrum(L); }},
        {Property::LogSobolev, [&L] { return log_sobolev(L); }},
        {Property::Strong, [&L] { return strong_ergodicity(L); }},
    };
    if (nu) tasks.push_back({Property::Nash, [&L, v = *nu] { return nash(L, v); }});
    rep.rows = evaluate_rows(tasks);
    rep.contradictions = contradictions(rep.rows);
    rep.lattice_closure_applied = close_lattice(rep.rows);
    if (!rep.consistent()) rep.notes.push_back("implication order violated; closure refused");
    return rep;
}

inline ClassificationReport classify(const BirthDeathModel& m, std::optional<double> nu = std::nullopt,
                                     Budget budget = {}) {
    MuLadder L(m, budget);
    return classify(L, nu);
}

}  // namespace ergokit
