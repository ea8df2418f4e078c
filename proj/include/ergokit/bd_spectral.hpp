#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ergokit/bd_criteria.hpp"
#include "ergokit/eigensolver.hpp"
#include "ergokit/errors.hpp"
#include "ergokit/ladder.hpp"
#include "ergokit/logmath.hpp"

namespace ergokit {

enum class GapStatus { Finite, Infinite, Undecided };

inline std::string_view to_string(GapStatus s) {
    switch (s) {
        case GapStatus::Finite: return "finite";
        case GapStatus::Infinite: return "infinite";
        default: return "undecided";
    }
}

/// Two-sided estimate of a principal eigenvalue from the delta quantity:
/// (4 delta)^-1 <= lambda <= delta^-1. status refers to delta.
struct GapEstimate {
    GapStatus status = GapStatus::Undecided;
    double delta = std::numeric_limits<double>::quiet_NaN();
    double lower = std::numeric_limits<double>::quiet_NaN();
    double upper = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> variational_lower;
    std::optional<double> oracle_value;
    std::optional<double> oracle_error;
    std::size_t oracle_size = 0;
    std::vector<std::string> notes;

    static GapEstimate from_delta(const Verdict& d) {
        GapEstimate g;
        if (d.holds() && d.quantity()) {
            g.status = GapStatus::Finite;
            g.delta = *d.quantity();
            g.upper = 1.0 / g.delta;
            g.lower = g.upper / 4.0;
        } else if (d.fails()) {
            g.status = GapStatus::Infinite;
            g.delta = std::numeric_limits<double>::infinity();
            g.lower = g.upper = 0.0;
        }
        return g;
    }
};

/// sup_{n>=1} mu[n,inf) sum_{j<n} 1/(mu_j b_j); the same verdict as the
/// exponential-ergodicity row.
inline Verdict delta_bd(const MuLadder& L) { return delta_verdict(L); }

/// Bracket for lambda_0 (Dirichlet condition below state 0); lambda_1 >= lambda_0,
/// so the lower end also bounds lambda_1. delta = inf gives a zero gap.
inline GapEstimate gap_bounds_bd(const MuLadder& L) {
    GapEstimate g = GapEstimate::from_delta(delta_bd(L));
    if (g.status == GapStatus::Infinite) g.notes.push_back("delta infinite: gap 0");
    if (g.status == GapStatus::Finite) g.notes.push_back("bracket is for lambda_0; lambda_1 >= lower");
    return g;
}

struct TestSequence {
    std::vector<double> w;  // w_0..w_N
    bool strictly_increasing() const {
        for (std::size_t i = 1; i < w.size(); ++i)
            if (!(w[i] > w[i - 1])) return false;
        return true;
    }
};

/// w_i = sqrt(sum_{j<i} 1/(mu_j b_j)), i = 0..N.
inline TestSequence representative_w(const MuLadder& L, std::size_t N) {
    if (N < 2) throw InvalidArgument("representative sequence needs N >= 2");
    if (N > L.horizon()) throw InvalidArgument("representative sequence beyond ladder horizon");
    const auto& t = L.tables();
    TestSequence s;
    s.w.resize(N + 1);
    for (std::size_t i = 0; i <= N; ++i) s.w[i] = std::exp(0.5 * t.log_prefix_scale[i]);
    return s;
}

struct VariationalBound {
    double value = 0.0;           // inf_{0 <= i < N} I_i(w)^-1
    std::size_t argmin = 0;
    double shift = 0.0;           // constant added to w to make pi(w) >= 0
    double tail_residual = 0.0;   // relative size of the extrapolated part of the tail sums
    std::size_t tail_horizon = 0; // last index summed explicitly
    bool vacuous = false;         // sum mu_j w_j diverged
};

/// Single-sequence evaluation of sup_w inf_i I_i(w)^-1 with
/// I_i(w) = (mu_i b_i (w_{i+1} - w_i))^-1 sum_{j>i} mu_j w_j.
/// `w` must be strictly increasing on 0..N and defined beyond N for the tail sums.
inline VariationalBound variational_lower_bd(const MuLadder& L, const std::function<double(std::size_t)>& w,
                                             std::size_t N) {
    if (N < 1) throw InvalidArgument("variational bound needs N >= 1");
    const Verdict& mass = L.mass();
    if (!mass.holds()) throw InvalidArgument("variational bound needs a finite total mass");
    const auto& t = L.tables();
    const std::size_t H = t.horizon;
    if (N >= H) throw InvalidArgument("variational horizon beyond ladder horizon");

    std::vector<double> ws;
    ws.reserve(N + 2);
    for (std::size_t i = 0; i <= N; ++i) {
        ws.push_back(w(i));
        if (!std::isfinite(ws.back())) throw InvalidArgument("test sequence not finite at i=" + std::to_string(i));
        if (i > 0 && !(ws[i] > ws[i - 1]))
            throw InvalidArgument("test sequence not strictly increasing at i=" + std::to_string(i));
    }

    // explicit summation of mu_j w_j until the terms are negligible
    VariationalBound out;
    std::vector<double> terms;  // terms[j] = mu_j w_j
    double running = 0.0;
    std::size_t j = 0;
    for (; j < H; ++j) {
        double wj = j < ws.size() ? ws[j] : w(j);
        if (wj == std::numeric_limits<double>::infinity()) {
            out.vacuous = true;
            return out;
        }
        if (!std::isfinite(wj)) throw InvalidArgument("test sequence not finite at j=" + std::to_string(j));
        if (j >= ws.size()) {
            if (!(wj > ws.back()))
                throw InvalidArgument("test sequence not strictly increasing at j=" + std::to_string(j));
            ws.push_back(wj);
        }
        const double term = std::exp(t.log_mu[j]) * wj;
        terms.push_back(term);
        running += std::fabs(term);
        if (!std::isfinite(running)) {
            out.vacuous = true;
            return out;
        }
        if (j > N + 1 && std::fabs(term) < 1e-12 * running) break;
    }
    out.tail_horizon = j;
    // remainder beyond the last explicit term: geometric bound from the last ratio
    double rem = 0.0;
    if (j >= H) {
        const std::size_t m = terms.size();
        const double r = terms[m - 2] != 0.0 ? terms[m - 1] / terms[m - 2] : 0.0;
        if (!(r < 1.0)) {
            out.vacuous = true;
            return out;
        }
        rem = terms[m - 1] * r / (1.0 - r);
    } else {
        rem = std::fabs(terms.back());
    }

    // centering: pi(w) >= 0
    double pi_w = rem;
    for (double v : terms) pi_w += v;
    if (pi_w < 0.0) {
        out.shift = -pi_w / std::exp(mass.log_quantity);
    }

    // suffix sums of mu_j (w_j + shift), j > i
    const std::size_t M = terms.size();
    std::vector<double> suffix(M + 1, 0.0);
    suffix[M] = rem + out.shift * std::exp(t.log_tail[std::min(M, H)]);
    for (std::size_t k = M; k-- > 0;) suffix[k] = suffix[k + 1] + terms[k] + out.shift * std::exp(t.log_mu[k]);
    out.tail_residual = suffix[0] > 0 ? rem / suffix[0] : 0.0;

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
        const double dw = ws[i + 1] - ws[i];
        // I_i = scale_i * suffix_{i+1} / dw
        const double inv = std::exp(std::log(dw) - t.log_scale[i] - std::log(suffix[i + 1]));
        if (inv < best) {
            best = inv;
            out.argmin = i;
        }
    }
    out.value = best;
    return out;
}

/// Beyond its last entry the sequence is continued with its final increment.
inline VariationalBound variational_lower_bd(const MuLadder& L, const TestSequence& s, std::size_t N) {
    if (!s.strictly_increasing()) throw InvalidArgument("test sequence must be strictly increasing");
    if (s.w.size() < N + 1 || s.w.size() < 2) throw InvalidArgument("test sequence shorter than N + 1");
    const double step = s.w.back() - s.w[s.w.size() - 2];
    return variational_lower_bd(
        L,
        [&](std::size_t i) {
            if (i < s.w.size()) return s.w[i];
            return s.w.back() + step * static_cast<double>(i + 1 - s.w.size());
        },
        N);
}

/// The representative sequence extended past its horizon through the ladder.
inline VariationalBound representative_lower_bd(const MuLadder& L, std::size_t N) {
    const auto& t = L.tables();
    return variational_lower_bd(
        L, [&t](std::size_t i) { return std::exp(0.5 * t.log_prefix_scale[std::min(i, t.horizon)]); }, N);
}

/// Same, with N the largest index <= horizon/2 where the sequence stays below e^600.
inline VariationalBound representative_lower_bd(const MuLadder& L) {
    const auto& t = L.tables();
    std::size_t N = 1;
    while (N + 1 <= t.horizon / 2 && 0.5 * t.log_prefix_scale[N + 1] < 600.0) ++N;
    return representative_lower_bd(L, N);
}

enum class Boundary { Reflecting, Absorbing };

/// Symmetrization of -Q restricted to {0..N}: reflecting deletes b_N, absorbing
/// additionally removes state 0 (Dirichlet condition).
inline TridiagonalMatrix truncated_generator(const BirthDeathModel& m, std::size_t N, Boundary boundary) {
    if (N < 1) throw InvalidArgument("truncation needs N >= 1");
    std::vector<double> a(N + 1, 0.0), b(N + 1, 0.0);
    for (std::size_t i = 0; i <= N; ++i) {
        b[i] = i < N ? m.birth_rate(i) : 0.0;
        a[i] = i > 0 ? m.death_rate(i) : 0.0;
    }
    const std::size_t first = boundary == Boundary::Absorbing ? 1 : 0;
    std::vector<double> d, e;
    for (std::size_t i = first; i <= N; ++i) {
        d.push_back(a[i] + b[i]);
        if (i < N) e.push_back(-std::sqrt(b[i] * a[i + 1]));
    }
    return TridiagonalMatrix(std::move(d), std::move(e));
}

struct OracleResult {
    double value = 0.0;
    double error = 0.0;  // |value(N) - value(N/2)|
    std::size_t size = 0;
};

inline double truncated_gap(const BirthDeathModel& m, std::size_t N, Boundary boundary) {
    TridiagonalMatrix T = truncated_generator(m, N, boundary);
    if (boundary == Boundary::Absorbing) return kth_eigenvalue(T, 0);
    const double l0 = kth_eigenvalue(T, 0);
    double norm = 0.0;
    for (double v : T.diag) norm = std::max(norm, std::fabs(v));
    if (std::fabs(l0) > 1e-9 * std::max(1.0, norm))
        throw Error("reflecting truncation: smallest eigenvalue " + std::to_string(l0) + " is not 0");
    return kth_eigenvalue(T, 1);
}

/// lambda_1 (reflecting) or lambda_0 (absorbing) of the truncated chain on {0..N},
/// with the N/2 -> N difference as error estimate.
inline OracleResult truncated_gap_oracle(const BirthDeathModel& m, std::size_t N,
                                         Boundary boundary = Boundary::Reflecting) {
    OracleResult r;
    r.size = N;
    r.value = truncated_gap(m, N, boundary);
    if (N / 2 >= 2) r.error = std::fabs(r.value - truncated_gap(m, N / 2, boundary));
    return r;
}

}  // namespace ergokit
