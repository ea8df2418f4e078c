#pragma once

// Three-valued decisions about series and suprema from finitely many probes.
//
// A series or running supremum is sampled at doubling horizons
// N_k = n0 * 2^k, k = 0..doublings. The decision looks only at the final
// window of probes:
//
//   series  Holds (finite)  relative increment < 1e-8 at the last two doublings,
//                           or dyadic block sums shrink with a stable ratio <= 0.9
//                           (remainder extrapolated as d*r/(1-r));
//           Fails (diverges) S_2N/S_N >= 1+1e-3 at the last three doublings with
//                           non-shrinking blocks (ratio >= 0.95), or N*term(N)
//                           nondecreasing over the last three probes;
//   sup     Holds           running max unchanged (relative 1e-12) at the last two
//                           doublings with argmax < N/2, or increments shrinking
//                           geometrically as above;
//           Fails           M_2N/M_N >= 1+1e-3 at the last three doublings with
//                           non-shrinking increments.
// Anything else is Inconclusive with reason BudgetExhausted.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ergokit/errors.hpp"
#include "ergokit/logmath.hpp"

namespace ergokit {

enum class Outcome { Holds, Fails, Inconclusive };

enum class Reason {
    Converged,
    DivergedGrowth,
    DivergedTermBound,
    BudgetExhausted,
    Implied,       // filled in by lattice closure
    Prerequisite,  // decided by another row (e.g. infinite mass)
    Horizon,       // bounded-horizon check, see note
};

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Holds: return "Holds";
        case Outcome::Fails: return "Fails";
        default: return "Inconclusive";
    }
}

inline std::string_view to_string(Reason r) {
    switch (r) {
        case Reason::Converged: return "converged";
        case Reason::DivergedGrowth: return "diverged-growth";
        case Reason::DivergedTermBound: return "diverged-term-bound";
        case Reason::BudgetExhausted: return "budget-exhausted";
        case Reason::Implied: return "implied";
        case Reason::Prerequisite: return "prerequisite";
        default: return "horizon";
    }
}

/// One probe: a horizon and the (log of the) probed quantity there.
struct Probe {
    double horizon = 0.0;
    double log_value = kNegInf;
    double value() const { return std::exp(log_value); }
};

struct Verdict {
    Outcome outcome = Outcome::Inconclusive;
    Reason reason = Reason::BudgetExhausted;
    std::vector<Probe> probes;
    double log_quantity = kNegInf;  // meaningful when has_quantity
    bool has_quantity = false;
    double log_remainder = kNegInf; // extrapolated tail beyond the last horizon
    double argmax = 0.0;            // sup verdicts: where the running max sits
    std::vector<std::string> flags;
    std::string note;

    bool holds() const { return outcome == Outcome::Holds; }
    bool fails() const { return outcome == Outcome::Fails; }
    bool inconclusive() const { return outcome == Outcome::Inconclusive; }

    /// Final estimate in the linear domain; nullopt if absent or not representable.
    std::optional<double> quantity() const {
        if (!has_quantity) return std::nullopt;
        double v = std::exp(log_quantity);
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    }
    void set_quantity(double log_q) {
        log_quantity = log_q;
        has_quantity = true;
    }
};

/// Probe schedule. horizon() is the largest index examined.
struct Budget {
    std::size_t n0 = 256;
    int doublings = 8;

    std::size_t horizon() const { return n0 << doublings; }

    /// Multiplier m adds floor(log2 m) doublings (m < 1 removes them, minimum 3).
    Budget scaled(double m) const {
        if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("budget multiplier must be positive");
        Budget b = *this;
        b.doublings = std::max(3, doublings + static_cast<int>(std::floor(std::log2(m) + 1e-12)));
        return b;
    }

    /// Default budget scaled by ERGOKIT_BUDGET when set.
    static Budget from_env() {
        Budget b;
        if (const char* s = std::getenv("ERGOKIT_BUDGET"); s && *s) {
            char* end = nullptr;
            double m = std::strtod(s, &end);
            if (end == s || *end != '\0') throw InvalidArgument("ERGOKIT_BUDGET is not a number");
            b = b.scaled(m);
        }
        return b;
    }
};

namespace detail {

inline constexpr double kFloor = 1e-300;
inline constexpr double kSeriesTol = 1e-8;
inline constexpr double kGrowthTol = 1e-3;
inline constexpr double kShrinkRatio = 0.9;
inline constexpr double kFlatRatio = 0.95;
inline constexpr double kStableSpread = 0.05;
inline constexpr double kPlateauTol = 1e-12;

/// log(exp(hi) - exp(lo)) for hi >= lo.
inline double log_sub_exp(double hi, double lo) {
    if (lo == kNegInf) return hi;
    if (lo >= hi) return kNegInf;
    return hi + std::log1p(-std::exp(lo - hi));
}

/// Relative increment (S_k - S_{k-1}) / S_k from log partial sums.
inline double rel_increment_log(double prev, double cur) {
    if (cur == kNegInf) return 0.0;
    if (prev == kNegInf) return 1.0;
    return -std::expm1(prev - cur);
}

/// ratio of consecutive block increments, computed from log partial sums.
inline double block_ratio(double a, double b, double c) {
    double d1 = log_sub_exp(b, a);
    double d2 = log_sub_exp(c, b);
    if (d2 == kNegInf) return 0.0;
    if (d1 == kNegInf) return kInf;
    return std::exp(d2 - d1);
}

}  // namespace detail

/// Decision on a nondecreasing sequence of log partial sums.
/// `log_last_terms` holds log(N_k * term(N_k)) for the term-bound rule (may be empty).
inline Verdict decide_series(std::vector<Probe> probes, const std::vector<double>& log_last_terms = {}) {
    using namespace detail;
    Verdict v;
    v.probes = std::move(probes);
    const auto& p = v.probes;
    const std::size_t K = p.size();
    if (K == 0) return v;
    const double last = p[K - 1].log_value;
    v.set_quantity(last);
    if (last == kNegInf) {
        v.outcome = Outcome::Holds;
        v.reason = Reason::Converged;
        return v;
    }
    if (K >= 3) {
        double r1 = rel_increment_log(p[K - 2].log_value, p[K - 1].log_value);
        double r0 = rel_increment_log(p[K - 3].log_value, p[K - 2].log_value);
        if (r1 < kSeriesTol && r0 < kSeriesTol) {
            v.outcome = Outcome::Holds;
            v.reason = Reason::Converged;
            // keep a remainder estimate so that tails near the horizon stay usable
            if (K >= 4) {
                double q1 = block_ratio(p[K - 3].log_value, p[K - 2].log_value, p[K - 1].log_value);
                double q0 = block_ratio(p[K - 4].log_value, p[K - 3].log_value, p[K - 2].log_value);
                double q = std::max(q0, q1);
                if (q < 1.0) {
                    v.log_remainder = log_sub_exp(p[K - 1].log_value, p[K - 2].log_value) + std::log(q / (1.0 - q));
                    v.set_quantity(log_add_exp(last, v.log_remainder));
                }
            }
            return v;
        }
    }
    if (K >= 4) {
        double q1 = block_ratio(p[K - 3].log_value, p[K - 2].log_value, p[K - 1].log_value);
        double q0 = block_ratio(p[K - 4].log_value, p[K - 3].log_value, p[K - 2].log_value);
        if (q1 <= kShrinkRatio && q0 <= kShrinkRatio && std::fabs(q1 - q0) <= kStableSpread) {
            double q = std::max(q0, q1);
            double log_d = log_sub_exp(p[K - 1].log_value, p[K - 2].log_value);
            v.log_remainder = log_d + std::log(q / (1.0 - q));
            v.set_quantity(log_add_exp(last, v.log_remainder));
            v.outcome = Outcome::Holds;
            v.reason = Reason::Converged;
            v.note = "extrapolated remainder";
            return v;
        }
        bool growing = true;
        for (std::size_t k = K - 3; k < K; ++k)
            if (p[k].log_value - p[k - 1].log_value < std::log1p(kGrowthTol)) growing = false;
        if (growing && q1 >= kFlatRatio && q0 >= kFlatRatio) {
            v.outcome = Outcome::Fails;
            v.reason = Reason::DivergedGrowth;
            v.has_quantity = false;
            return v;
        }
    }
    if (log_last_terms.size() >= 3) {
        const std::size_t T = log_last_terms.size();
        bool bounded = std::isfinite(log_last_terms[T - 3]);
        for (std::size_t k = T - 2; k < T; ++k)
            if (!(log_last_terms[k] >= log_last_terms[k - 1] + std::log(0.999))) bounded = false;
        if (bounded) {
            v.outcome = Outcome::Fails;
            v.reason = Reason::DivergedTermBound;
            v.has_quantity = false;
            return v;
        }
    }
    return v;
}

/// Decision on running-maximum probes. `argmax` is where the final maximum sits.
inline Verdict decide_sup(std::vector<Probe> probes, double argmax) {
    using namespace detail;
    Verdict v;
    v.probes = std::move(probes);
    v.argmax = argmax;
    const auto& p = v.probes;
    const std::size_t K = p.size();
    if (K == 0) return v;
    const double last = p[K - 1].log_value;
    v.set_quantity(last);
    if (last == kNegInf) {
        v.outcome = Outcome::Holds;
        v.reason = Reason::Converged;
        return v;
    }
    if (K >= 3) {
        double r1 = rel_increment_log(p[K - 2].log_value, p[K - 1].log_value);
        double r0 = rel_increment_log(p[K - 3].log_value, p[K - 2].log_value);
        if (r1 <= kPlateauTol && r0 <= kPlateauTol && argmax < p[K - 1].horizon / 2) {
            v.outcome = Outcome::Holds;
            v.reason = Reason::Converged;
            return v;
        }
        if (r1 < kSeriesTol && r0 < kSeriesTol) {
            v.outcome = Outcome::Holds;
            v.reason = Reason::Converged;
            return v;
        }
    }
    if (K >= 4) {
        double q1 = block_ratio(p[K - 3].log_value, p[K - 2].log_value, p[K - 1].log_value);
        double q0 = block_ratio(p[K - 4].log_value, p[K - 3].log_value, p[K - 2].log_value);
        if (q1 <= kShrinkRatio && q0 <= kShrinkRatio && std::fabs(q1 - q0) <= kStableSpread) {
            double q = std::max(q0, q1);
            v.log_remainder = log_sub_exp(p[K - 1].log_value, p[K - 2].log_value) + std::log(q / (1.0 - q));
            v.outcome = Outcome::Holds;
            v.reason = Reason::Converged;
            v.note = "running max still creeping; limit extrapolated";
            return v;
        }
        bool growing = true;
        for (std::size_t k = K - 3; k < K; ++k)
            if (p[k].log_value - p[k - 1].log_value < std::log1p(kGrowthTol)) growing = false;
        if (growing && q1 >= kFlatRatio && q0 >= kFlatRatio) {
            v.outcome = Outcome::Fails;
            v.reason = Reason::DivergedGrowth;
            v.has_quantity = false;
            return v;
        }
    }
    return v;
}

/// Decision on whether a sequence d_n probed at growing n tends to 0.
/// Holds when the last three probes decrease and end below 1e-6, or decay with a
/// stable ratio <= 0.9; Fails when they level off (within 5%) above 1e-3.
inline Verdict decide_vanishing(std::vector<Probe> probes) {
    using namespace detail;
    Verdict v;
    v.probes = std::move(probes);
    const auto& p = v.probes;
    const std::size_t K = p.size();
    if (K < 3) return v;
    auto val = [&](std::size_t i) { return std::exp(p[i].log_value); };
    const double a = val(K - 3), b = val(K - 2), c = val(K - 1);
    v.set_quantity(p[K - 1].log_value);
    const bool decreasing = b <= a && c <= b && c < a;
    if ((decreasing && c < 1e-6) || c == 0.0) {
        v.outcome = Outcome::Holds;
        v.reason = Reason::Converged;
        return v;
    }
    if (decreasing && a > 0.0 && b > 0.0) {
        const double r0 = b / a, r1 = c / b;
        if (r0 <= kShrinkRatio && r1 <= kShrinkRatio && std::fabs(r0 - r1) <= kStableSpread) {
            v.outcome = Outcome::Holds;
            v.reason = Reason::Converged;
            v.note = "geometric decay; limit extrapolated to 0";
            return v;
        }
    }
    const double lo = std::min({a, b, c}), hi = std::max({a, b, c});
    if (lo > 1e-3 && hi <= 1.05 * lo) {
        v.outcome = Outcome::Fails;
        v.reason = Reason::DivergedGrowth;
        v.note = "limit stays positive";
    }
    return v;
}

/// Series sum_{n >= first} term(n), with `log_term(n)` = log term(n) (-inf for 0).
inline Verdict series_verdict_log(const std::function<double(std::size_t)>& log_term, const Budget& budget = {},
                                  std::size_t first = 0) {
    std::vector<Probe> probes;
    std::vector<double> last_terms;
    double acc = kNegInf;
    std::size_t next = budget.n0;
    const std::size_t end = budget.horizon();
    for (std::size_t n = first; n < end; ++n) {
        double lt = log_term(n);
        if (std::isnan(lt)) throw DomainError("series term undefined at n=" + std::to_string(n));
        acc = log_add_exp(acc, lt);
        if (n + 1 == next) {
            probes.push_back({static_cast<double>(next), acc});
            last_terms.push_back(std::log(static_cast<double>(n)) + lt);
            next *= 2;
        }
    }
    return decide_series(std::move(probes), last_terms);
}

/// Linear-term convenience wrapper. Terms must be nonnegative.
inline Verdict series_verdict(const std::function<double(std::size_t)>& term, const Budget& budget = {},
                              std::size_t first = 0) {
    return series_verdict_log(
        [&](std::size_t n) {
            double t = term(n);
            if (!(t >= 0.0)) throw DomainError("negative or undefined series term at n=" + std::to_string(n));
            return t == 0.0 ? kNegInf : std::log(t);
        },
        budget, first);
}

/// Running supremum of value(n) over n >= first, `log_value(n)` = log value(n).
inline Verdict sup_verdict_log(const std::function<double(std::size_t)>& log_value, const Budget& budget = {},
                               std::size_t first = 0) {
    std::vector<Probe> probes;
    double best = kNegInf;
    std::size_t arg = first;
    std::size_t next = budget.n0;
    const std::size_t end = budget.horizon();
    for (std::size_t n = first; n < end; ++n) {
        double lv = log_value(n);
        if (std::isnan(lv)) throw DomainError("sup value undefined at n=" + std::to_string(n));
        if (lv > best) {
            best = lv;
            arg = n;
        }
        if (n + 1 == next) {
            probes.push_back({static_cast<double>(next), best});
            next *= 2;
        }
    }
    return decide_sup(std::move(probes), static_cast<double>(arg));
}

inline Verdict sup_verdict(const std::function<double(std::size_t)>& value, const Budget& budget = {},
                           std::size_t first = 0) {
    return sup_verdict_log(
        [&](std::size_t n) {
            double t = value(n);
            if (!(t >= 0.0)) throw DomainError("negative or undefined sup value at n=" + std::to_string(n));
            return t == 0.0 ? kNegInf : std::log(t);
        },
        budget, first);
}

}  // namespace ergokit
