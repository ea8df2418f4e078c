#pragma once

// Diffusions on [0, inf) with generator L = a(x) d^2/dx^2 + b(x) d/dx.
// C(x) = int_0^x b/a, mu(dx) = e^{C(x)} / a(x) dx.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ergokit/bd_spectral.hpp"
#include "ergokit/eigensolver.hpp"
#include "ergokit/errors.hpp"
#include "ergokit/lattice.hpp"
#include "ergokit/logmath.hpp"
#include "ergokit/model.hpp"
#include "ergokit/quadrature.hpp"
#include "ergokit/verdict.hpp"

namespace ergokit {

inline const std::string kConjectureFlag = "conjectured criterion";

enum class Gap { Lambda0, Lambda1 };

inline std::string_view to_string(Gap g) { return g == Gap::Lambda0 ? "lambda0" : "lambda1"; }

/// Grid layout. Nodes sit at 2^(m + j/per_octave) for m in [min_exp, max_exp), plus 0.
/// max_exp defaults to 12 + budget doublings so that the dyadic probes mirror the
/// chain ladder (2^20 at the default budget).
struct DiffusionGrid {
    int per_octave = 20;
    int min_exp = -14;
    int max_exp = 20;
    double tol = 1e-11;

    static DiffusionGrid from_budget(const Budget& b) {
        DiffusionGrid g;
        g.max_exp = 12 + b.doublings;
        return g;
    }
};

/// Cached cumulative quadratures for one diffusion. Immutable after
/// construction; copies share the tables.
///
/// Cumulative integrals are kept relative to C at the node they end on
/// (rel_T[k] = log mu[x_k, inf) - C(x_k), etc.), so that products such as
/// mu[x,inf) int_0^x e^{-C} stay accurate when |C| is huge.
class DiffusionAnalysis {
public:
    struct Tables {
        DiffusionGrid grid;
        std::vector<double> x;          // nodes, x[0] = 0
        std::vector<double> C;          // C(x_k)
        std::vector<double> D;          // b/a at x_k
        std::vector<double> dC;         // C(x_{k+1}) - C(x_k)
        std::vector<double> pm;         // log int_panel e^{C - C_k} / a
        std::vector<double> pm_hi;      // log int_panel e^{C - C_{k+1}} / a
        std::vector<double> ps_hi;      // log int_panel e^{C_{k+1} - C}
        std::vector<double> log_M;      // log mu[0, x_k]
        std::vector<double> log_S;      // log int_0^{x_k} e^{-C}
        std::vector<double> rel_M;      // log_M - C
        std::vector<double> rel_S;      // log_S + C
        std::vector<double> rel_T;      // log mu[x_k, inf) - C; +inf unless the mass converged
        std::vector<std::size_t> dyadic;  // node index of 2^m, m = 0..max_exp
        Verdict mass;
        std::size_t unconverged = 0;
    };

    explicit DiffusionAnalysis(DiffusionModel model, Budget budget = Budget::from_env())
        : DiffusionAnalysis(std::move(model), DiffusionGrid::from_budget(budget)) {}

    DiffusionAnalysis(DiffusionModel model, DiffusionGrid grid)
        : model_(std::make_shared<const DiffusionModel>(std::move(model))) {
        if (grid.per_octave < 1 || grid.min_exp > -1 || grid.max_exp < 4)
            throw InvalidArgument("diffusion grid too small");
        if (!(grid.tol > 0.0)) throw InvalidArgument("grid tolerance must be positive");
        model_->validate();
        tables_ = std::make_shared<const Tables>(build(grid));
    }

    const DiffusionModel& model() const { return *model_; }
    const Tables& tables() const { return *tables_; }
    const Verdict& mass() const { return tables_->mass; }
    std::size_t last() const { return tab().x.size() - 1; }
    double x_max() const { return tab().x.back(); }

    /// Panel containing x: largest k with x_k <= x (last() beyond the grid).
    std::size_t panel_of(double x) const {
        const auto& xs = tab().x;
        if (x >= xs.back()) return last();
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        return static_cast<std::size_t>(it - xs.begin()) - 1;
    }

    /// C(x) - C(x_k) from cubic Hermite data on panel k; linear beyond the grid.
    double c_rel(std::size_t k, double x) const {
        const auto& t = tab();
        if (k + 1 >= t.x.size()) return t.D.back() * (x - t.x.back());
        const double h = t.x[k + 1] - t.x[k];
        const double s = (x - t.x[k]) / h, r = (t.x[k + 1] - x) / h;
        return s * (h * (r * r * t.D[k] - s * r * t.D[k + 1]) + s * (3 - 2 * s) * t.dC[k]);
    }

    /// C(x) - C(x_{k+1}) on panel k, accurate near the right end.
    double c_hi(std::size_t k, double x) const {
        const auto& t = tab();
        const double h = t.x[k + 1] - t.x[k];
        const double s = (x - t.x[k]) / h, r = (t.x[k + 1] - x) / h;
        return r * (h * (s * r * t.D[k] - s * s * t.D[k + 1]) - r * (3 - 2 * r) * t.dC[k]);
    }

    /// d/dx of c_rel(k, x).
    double c_slope(std::size_t k, double x) const {
        const auto& t = tab();
        if (k + 1 >= t.x.size()) return t.D.back();
        const double h = t.x[k + 1] - t.x[k];
        const double s = (x - t.x[k]) / h;
        return (3 * s * s - 4 * s + 1) * t.D[k] + (-6 * s * s + 6 * s) * t.dC[k] / h + (3 * s * s - 2 * s) * t.D[k + 1];
    }

    /// Interpolated C, used inside integrands.
    double c_interp(double x) const {
        const std::size_t k = panel_of(x);
        return tab().C[k] + c_rel(k, x);
    }

    /// C(x) by quadrature from the nearest node below.
    double C_of(double x) const {
        if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("C(x) needs finite x >= 0");
        const std::size_t k = panel_of(x);
        const auto& t = tab();
        if (x == t.x[k]) return t.C[k];
        const auto r = integrate([this](double u) { return model_->drift(u) / model_->diffusion(u); }, t.x[k], x,
                                 {1e-12});
        return t.C[k] + r.value;
    }

    /// log int_lo^hi e^{sign C(u)} w(u) du inside panel k, w = 1/a or 1, relative to
    /// C at either end of the panel.
    struct Piece {
        double lo = kNegInf;  // minus sign C(x_k)
        double hi = kNegInf;  // minus sign C(x_{k+1}); unused beyond the grid
    };

    /// The integral is evaluated relative to whichever end carries the peak, so
    /// that no large exponents cancel. Steep monotone stretches are cut to the
    /// window where the integrand is within e^-40 of its peak. hi may be +inf on
    /// the last panel.
    Piece log_piece(int sign, bool inv_a, std::size_t k, double lo, double hi) const {
        Piece out;
        if (!(hi > lo)) return out;
        const auto& t = tab();
        const bool beyond = k + 1 >= t.x.size();
        const double dC = beyond ? 0.0 : t.dC[k];
        const double s0 = sign * t.D[k], s1 = sign * t.D[beyond ? k : k + 1];
        auto finish = [&](double v, bool rel_hi) {
            if (beyond) {
                out.lo = v;
            } else if (rel_hi) {
                out.hi = v;
                out.lo = v + sign * dC;
            } else {
                out.lo = v;
                out.hi = v - sign * dC;
            }
            return out;
        };
        auto weight = [&](double u) { return inv_a ? -std::log(model_->diffusion(u)) : 0.0; };
        if (s0 < 0.0 && s1 < 0.0) {
            const double w = 40.0 / std::min(-s0, -s1);
            if (w < 1e-9 * lo) return finish(sign * c_rel(k, lo) - std::log(-sign * c_slope(k, lo)) + weight(lo), false);
            if (lo + w < hi) hi = lo + w;
        } else if (s0 > 0.0 && s1 > 0.0 && std::isfinite(hi)) {
            const double w = 40.0 / std::min(s0, s1);
            if (w < 1e-9 * hi) {
                const double v = sign * c_slope(k, hi);
                return beyond ? finish(sign * c_rel(k, hi) - std::log(v) + weight(hi), false)
                              : finish(sign * c_hi(k, hi) - std::log(v) + weight(hi), true);
            }
            if (hi - w > lo) lo = hi - w;
        }
        const bool rel_hi = !beyond && std::isfinite(hi) && sign * c_rel(k, hi) > sign * c_rel(k, lo);
        auto ex = [&](double u) { return sign * (rel_hi ? c_hi(k, u) : c_rel(k, u)); };
        const double mid = std::isfinite(hi) ? 0.5 * (lo + hi) : lo;
        const double shift = std::max({ex(lo), ex(mid), std::isfinite(hi) ? ex(hi) : kNegInf});
        auto g = [&](double u) {
            const double e = std::exp(ex(u) - shift);
            return inv_a ? e / model_->diffusion(u) : e;
        };
        const auto r = integrate(g, lo, hi, {t.grid.tol});
        if (!(r.value > 0.0)) return out;
        return finish(std::log(r.value) + shift, rel_hi);
    }

    /// log mu[x, inf) - C(x).
    double tail_rel_at(double x) const {
        const auto& t = tab();
        if (!mass().holds()) return kInf;
        const std::size_t k = panel_of(x);
        if (k >= last()) return log_piece(1, true, k, x, kInf).lo - c_rel(k, x);
        return log_add_exp(log_piece(1, true, k, x, t.x[k + 1]).hi, t.rel_T[k + 1]) - c_hi(k, x);
    }

    /// log int_0^x e^{-C} + C(x).
    double scale_rel_at(double x) const {
        const auto& t = tab();
        const std::size_t k = panel_of(x);
        return log_add_exp(t.rel_S[k], log_piece(-1, false, k, t.x[k], x).lo) + c_rel(k, x);
    }

    /// log mu[0, x] - C(x).
    double mass_rel_at(double x) const {
        const auto& t = tab();
        const std::size_t k = panel_of(x);
        return log_add_exp(t.rel_M[k], log_piece(1, true, k, t.x[k], x).lo) - c_rel(k, x);
    }

    /// log int_0^x e^{-C} from cubic Hermite interpolation of the relative table
    /// (d rel_S / dx = e^{-rel_S} + b/a). Cheap enough for integrands.
    double log_scale_fast(double x) const {
        const auto& t = tab();
        if (x <= 0.0) return kNegInf;
        const std::size_t k = panel_of(x);
        if (k == 0) return std::log(x) - 0.5 * c_rel(0, x);
        if (k >= last()) return log_scale_at(x);
        const double h = t.x[k + 1] - t.x[k];
        const double s = (x - t.x[k]) / h, r = (t.x[k + 1] - x) / h;
        const double d0 = std::exp(-t.rel_S[k]) + t.D[k], d1 = std::exp(-t.rel_S[k + 1]) + t.D[k + 1];
        const double rel = r * r * (1 + 2 * s) * t.rel_S[k] + s * s * (1 + 2 * r) * t.rel_S[k + 1] +
                           h * s * r * (r * d0 - s * d1);
        return rel - t.C[k] - c_rel(k, x);
    }

    double log_tail_at(double x) const { return tail_rel_at(x) + c_interp(x); }
    double log_scale_at(double x) const { return scale_rel_at(x) - c_interp(x); }
    double log_mass_at(double x) const { return mass_rel_at(x) + c_interp(x); }

    std::shared_ptr<const DiffusionModel> model_ptr() const { return model_; }

private:
    std::shared_ptr<const DiffusionModel> model_;
    std::shared_ptr<const Tables> tables_;
    const Tables* building_ = nullptr;

    const Tables& tab() const { return tables_ ? *tables_ : *building_; }

    Tables build(const DiffusionGrid& grid) {
        Tables t;
        t.grid = grid;
        building_ = &t;
        const DiffusionModel& m = *model_;
        t.x.push_back(0.0);
        const int n_nodes = (grid.max_exp - grid.min_exp) * grid.per_octave + 1;
        for (int i = 0; i < n_nodes; ++i) {
            const int m_int = grid.min_exp + i / grid.per_octave;
            const int frac = i % grid.per_octave;
            t.x.push_back(frac == 0 ? std::ldexp(1.0, m_int)
                                    : std::exp2(m_int + static_cast<double>(frac) / grid.per_octave));
        }
        const std::size_t K = t.x.size() - 1;
        for (int e = 0; e <= grid.max_exp; ++e)
            t.dyadic.push_back(static_cast<std::size_t>((e - grid.min_exp) * grid.per_octave + 1));

        auto ratio = [&m](double u) { return m.drift(u) / m.diffusion(u); };
        t.D.resize(K + 1);
        for (std::size_t k = 0; k <= K; ++k) {
            t.D[k] = ratio(t.x[k]);
            if (!std::isfinite(t.D[k])) throw ModelError("b/a not finite at x=" + std::to_string(t.x[k]));
        }
        t.C.assign(K + 1, 0.0);
        t.dC.assign(K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const auto r = integrate(ratio, t.x[k], t.x[k + 1], {1e-12});
            if (!r.converged) ++t.unconverged;
            t.dC[k] = r.value;
            t.C[k + 1] = t.C[k] + r.value;
        }

        t.pm.resize(K);
        t.pm_hi.resize(K);
        t.ps_hi.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            const Piece pm = log_piece(1, true, k, t.x[k], t.x[k + 1]);
            t.pm[k] = pm.lo;
            t.pm_hi[k] = pm.hi;
            t.ps_hi[k] = log_piece(-1, false, k, t.x[k], t.x[k + 1]).hi;
        }
        t.log_M.assign(K + 1, kNegInf);
        t.log_S.assign(K + 1, kNegInf);
        t.rel_M.assign(K + 1, kNegInf);
        t.rel_S.assign(K + 1, kNegInf);
        for (std::size_t k = 0; k < K; ++k) {
            t.log_M[k + 1] = log_add_exp(t.log_M[k], t.pm[k] + t.C[k]);
            t.log_S[k + 1] = log_add_exp(t.log_S[k], t.ps_hi[k] - t.C[k + 1]);
            t.rel_M[k + 1] = log_add_exp(t.rel_M[k] - t.dC[k], t.pm_hi[k]);
            t.rel_S[k + 1] = log_add_exp(t.rel_S[k] + t.dC[k], t.ps_hi[k]);
        }

        std::vector<Probe> probes;
        std::vector<double> last_terms;
        for (std::size_t i : t.dyadic) {
            probes.push_back({t.x[i], t.log_M[i]});
            last_terms.push_back(std::log(t.x[i]) + t.C[i] - std::log(m.diffusion(t.x[i])));
        }
        t.mass = decide_series(std::move(probes), last_terms);

        t.rel_T.assign(K + 1, kInf);
        if (t.mass.holds()) {
            // beyond the grid: exponential decay when the drift dominates, a power law
            // fitted on the last panel otherwise, the series remainder as fallback
            double beyond = kNegInf;
            const double X = t.x[K];
            const double p = (t.dC[K - 1] - std::log(m.diffusion(X)) + std::log(m.diffusion(t.x[K - 1]))) /
                             std::log(X / t.x[K - 1]);
            if (t.D[K] < 0.0 && X * -t.D[K] >= 40.0) {
                const double s = t.D[K];
                auto g = [&](double u) { return std::exp(s * (u - X)) / m.diffusion(u); };
                const auto r = integrate(g, X, X + 40.0 / -s, {t.grid.tol});
                if (r.converged && r.value > 0.0) beyond = std::log(r.value);
            } else if (p < -1.0) {
                // b/a continued as D_K X / u
                const double e = X * t.D[K];
                auto g = [&](double u) { return std::exp(e * std::log(u / X)) / m.diffusion(u); };
                const auto r = integrate(g, X, kInf, {t.grid.tol});
                beyond = r.converged && r.value > 0.0 ? std::log(r.value)
                                                      : std::log(X / (-p - 1.0)) - std::log(m.diffusion(X));
            }
            t.rel_T[K] = beyond > kNegInf ? beyond : t.mass.log_remainder - t.C[K];
            for (std::size_t k = K; k-- > 0;) t.rel_T[k] = log_add_exp(t.rel_T[k + 1] + t.dC[k], t.pm[k]);
            t.mass.log_remainder = t.rel_T[K] + t.C[K];
            t.mass.set_quantity(log_add_exp(t.log_M[K], t.mass.log_remainder));
        }
        building_ = nullptr;
        return t;
    }
};

inline double C_of(const DiffusionAnalysis& A, double x) { return A.C_of(x); }

/// mu[x, y] with y possibly +inf. The infinite case carries the mass verdict:
/// Fails means mu[x, inf) = inf.
inline Verdict mu_xy(const DiffusionAnalysis& A, double x, double y) {
    if (!(x >= 0.0) || !(y >= x) || std::isnan(y)) throw InvalidArgument("mu[x,y] needs 0 <= x <= y");
    Verdict v;
    if (std::isfinite(y)) {
        v.outcome = Outcome::Holds;
        v.reason = Reason::Converged;
        if (y > x) {
            const double ly = A.log_mass_at(y), lx = A.log_mass_at(x);
            const std::size_t kx = A.panel_of(x), ky = A.panel_of(y);
            // direct piece when both ends share a panel, otherwise difference of cumulatives
            v.set_quantity(kx == ky ? A.log_piece(1, true, kx, x, y).lo + A.tables().C[kx] : detail::log_sub_exp(ly, lx));
        } else {
            v.set_quantity(kNegInf);
        }
        return v;
    }
    v = A.mass();
    if (v.holds()) v.set_quantity(A.log_tail_at(x));
    return v;
}

namespace detail {

inline Verdict diff_prerequisite(const Verdict& mass) {
    if (mass.fails()) return prerequisite(Outcome::Fails, "mu[0,inf) diverges");
    return prerequisite(Outcome::Inconclusive, "total mass undecided");
}

/// Series verdict from a cumulative log array probed at the dyadic nodes.
/// `log_integrand` feeds the term-bound rule through x * g(x).
inline Verdict diff_series(const DiffusionAnalysis& A, const std::vector<double>& log_cum,
                           const std::function<double(std::size_t)>& log_integrand) {
    const auto& t = A.tables();
    std::vector<Probe> probes;
    std::vector<double> last_terms;
    for (std::size_t i : t.dyadic) {
        probes.push_back({t.x[i], log_cum[i]});
        last_terms.push_back(std::log(t.x[i]) + log_integrand(i));
    }
    return decide_series(std::move(probes), last_terms);
}

/// Cumulative trapezoid rule on the nodes, in logs.
inline std::vector<double> log_trapezoid(const DiffusionAnalysis& A, const std::function<double(std::size_t)>& lg) {
    const auto& t = A.tables();
    std::vector<double> out(t.x.size(), kNegInf);
    double prev = lg(0);
    for (std::size_t i = 1; i < t.x.size(); ++i) {
        const double cur = lg(i);
        const double piece = std::log(0.5 * (t.x[i] - t.x[i - 1])) + log_add_exp(prev, cur);
        out[i] = log_add_exp(out[i - 1], piece);
        prev = cur;
    }
    return out;
}

/// Golden-section search for the maximum of g on [lo, hi].
inline std::pair<double, double> golden_max(const std::function<double(double)>& g, double lo, double hi) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < 80 && hi - lo > 1e-10 * std::max(1e-300, std::fabs(hi)); ++it) {
        if (gc >= gd) {
            hi = d;
            d = c;
            gd = gc;
            c = hi - r * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + r * (hi - lo);
            gd = g(d);
        }
    }
    return gc >= gd ? std::pair{c, gc} : std::pair{d, gd};
}

/// Running maximum over the nodes with dyadic probes, refined near the argmax
/// when `log_value_at` is given.
inline Verdict diff_sup(const DiffusionAnalysis& A, const std::function<double(std::size_t)>& log_value,
                        const std::function<double(double)>& log_value_at = {}) {
    const auto& t = A.tables();
    std::vector<Probe> probes;
    double best = kNegInf;
    std::size_t arg = 1, next = 0;
    for (std::size_t i = 1; i < t.x.size(); ++i) {
        const double lv = log_value(i);
        if (std::isnan(lv)) throw DomainError("sup value undefined at x=" + std::to_string(t.x[i]));
        if (lv > best) {
            best = lv;
            arg = i;
        }
        if (next < t.dyadic.size() && i == t.dyadic[next]) {
            probes.push_back({t.x[i], best});
            ++next;
        }
    }
    Verdict v = decide_sup(std::move(probes), t.x[arg]);
    if (v.holds() && log_value_at && best > kNegInf && arg < A.last()) {
        auto [xr, vr] = golden_max(log_value_at, t.x[arg - 1], t.x[arg + 1]);
        if (vr > v.log_quantity) {
            v.set_quantity(vr);
            v.argmax = xr;
        }
    }
    return v;
}

}  // namespace detail

/// int_0^inf mu[0,x] e^{-C(x)} dx = inf.
inline Verdict uniqueness(const DiffusionAnalysis& A) {
    const auto& t = A.tables();
    auto lg = [&t](std::size_t i) { return t.rel_M[i]; };
    return detail::holds_if_diverges(detail::diff_series(A, detail::log_trapezoid(A, lg), lg));
}

/// int_0^inf e^{-C(x)} dx = inf.
inline Verdict recurrence(const DiffusionAnalysis& A) {
    const auto& t = A.tables();
    return detail::holds_if_diverges(detail::diff_series(A, t.log_S, [&t](std::size_t i) { return -t.C[i]; }));
}

inline Verdict ergodicity(const DiffusionAnalysis& A) {
    const Verdict& mass = A.mass();
    if (mass.fails()) {
        Verdict v = mass;
        v.note = "mu[0,inf) diverges";
        return v;
    }
    Verdict u = uniqueness(A);
    if (u.fails()) return detail::prerequisite(Outcome::Fails, "process not unique");
    Verdict v = mass;
    if (mass.inconclusive() || u.inconclusive()) {
        v.outcome = Outcome::Inconclusive;
        v.note = mass.inconclusive() ? "total mass undecided" : "uniqueness undecided";
    }
    return v;
}

/// delta = sup_{x>0} mu[x,inf) int_0^x e^{-C}.
inline Verdict delta_diff(const DiffusionAnalysis& A) {
    if (!A.mass().holds()) return detail::diff_prerequisite(A.mass());
    const auto& t = A.tables();
    return detail::diff_sup(
        A, [&t](std::size_t i) { return t.rel_T[i] + t.rel_S[i]; },
        [&A](double x) { return A.tail_rel_at(x) + A.scale_rel_at(x); });
}

/// Poincare row: delta < inf, together with uniqueness.
inline Verdict poincare(const DiffusionAnalysis& A) {
    Verdict d = delta_diff(A);
    if (!d.holds()) return d;
    Verdict u = uniqueness(A);
    if (u.fails()) return detail::prerequisite(Outcome::Fails, "process not unique");
    if (u.inconclusive()) {
        d.outcome = Outcome::Inconclusive;
        d.note = "uniqueness undecided";
    }
    return d;
}

/// lim_n sup_{x>n} mu[x,inf) int_n^x e^{-C} = 0 at n = 1, 2, 4, ... up to x_max/64.
inline Verdict discrete_spectrum(const DiffusionAnalysis& A) {
    if (!A.mass().holds()) return detail::diff_prerequisite(A.mass());
    const auto& t = A.tables();
    std::vector<Probe> probes;
    for (std::size_t e = 0; e + 6 < t.dyadic.size(); ++e) {
        const std::size_t n = t.dyadic[e];
        double scale = kNegInf, best = kNegInf;  // scale: log int_n^{x_{k+1}} e^{-C} + C(x_{k+1})
        for (std::size_t k = n; k < A.last(); ++k) {
            scale = log_add_exp(scale + t.dC[k], t.ps_hi[k]);
            best = std::max(best, t.rel_T[k + 1] + scale);
        }
        probes.push_back({t.x[n], best});
    }
    return decide_vanishing(std::move(probes));
}

/// sup_x mu[x,inf) log(1/mu[x,inf)) int_0^x e^{-C}; points with mu[x,inf) >= 1 are skipped.
inline Verdict log_sobolev(const DiffusionAnalysis& A) {
    if (!A.mass().holds()) return detail::diff_prerequisite(A.mass());
    const auto& t = A.tables();
    // relative tail, relative scale, C
    auto f = [](double rt, double rs, double c) {
        const double lt = rt + c;
        return lt < 0.0 && lt > kNegInf ? rt + rs + std::log(-lt) : kNegInf;
    };
    return detail::diff_sup(
        A, [&](std::size_t i) { return f(t.rel_T[i], t.rel_S[i], t.C[i]); },
        [&](double x) { return f(A.tail_rel_at(x), A.scale_rel_at(x), A.c_interp(x)); });
}

/// int_0^inf mu[x,inf) e^{-C(x)} dx < inf. Always flagged as conjectured.
inline Verdict strong_ergodicity(const DiffusionAnalysis& A) {
    Verdict v;
    if (!A.mass().holds()) {
        v = detail::diff_prerequisite(A.mass());
    } else {
        const auto& t = A.tables();
        auto lg = [&t](std::size_t i) { return t.rel_T[i]; };
        v = detail::diff_series(A, detail::log_trapezoid(A, lg), lg);
    }
    v.flags.push_back(kConjectureFlag);
    return v;
}

/// sup_x mu[x,inf)^{(nu-2)/nu} int_0^x e^{-C}, nu > 2.
inline Verdict nash(const DiffusionAnalysis& A, double nu) {
    if (!(nu > 2.0) || !std::isfinite(nu)) throw InvalidArgument("Nash criterion needs nu > 2");
    Verdict v;
    if (!A.mass().holds()) {
        v = detail::diff_prerequisite(A.mass());
    } else {
        const auto& t = A.tables();
        const double e = (nu - 2.0) / nu;
        v = detail::diff_sup(
            A, [&](std::size_t i) { return e * t.rel_T[i] + t.rel_S[i] - (1.0 - e) * t.C[i]; },
            [&](double x) { return e * A.tail_rel_at(x) + A.scale_rel_at(x) - (1.0 - e) * A.c_interp(x); });
    }
    v.flags.push_back(kNashCaveat);
    return v;
}

/// sup_x x int_x^inf 1/a for driftless models.
inline Verdict kac_krein_delta(const DiffusionAnalysis& A) {
    if (!A.model().driftless()) throw InvalidArgument("Kac-Krein delta needs b = 0");
    if (!A.mass().holds()) return detail::diff_prerequisite(A.mass());
    const auto& t = A.tables();
    return detail::diff_sup(
        A, [&t](std::size_t i) { return std::log(t.x[i]) + t.rel_T[i] + t.C[i]; },
        [&A](double x) { return std::log(x) + A.log_tail_at(x); });
}

namespace detail {

/// Integral from x in the direction of `step`, on panels whose width doubles
/// away from x. Upward it runs to infinity past `end`; downward it stops at `end`.
inline double panel_sum(const std::function<double(double)>& f, double x, double step, double end,
                        const QuadratureOptions& opt) {
    double sum = 0.0, w = std::fabs(step), edge = x;
    int small = 0;
    for (int k = 0; k < 400; ++k, w *= 2.0) {
        if (step > 0.0) {
            if (edge > end) return sum + integrate(f, edge, kInf, opt).value;
            const double r = integrate(f, edge, edge + w, opt).value;
            sum += r;
            edge += w;
            small = r <= 1e-17 * sum ? small + 1 : 0;
            if (small >= 3) return sum;
        } else {
            const double lo = std::max(end, edge - w);
            sum += integrate(f, lo, edge, opt).value;
            edge = lo;
            if (edge <= end) return sum;
        }
    }
    return sum;
}

}  // namespace detail

/// Weighted Hardy constant B = sup_x pi[x,inf) int_0^x e^{-C} with pi = mu / Z,
/// evaluated by direct quadrature on 64 points per decade over [1e-3, 1e6],
/// with panels scaled to a/|b| around each point.
/// Equals delta / Z.
inline Verdict muckenhoupt_B(const DiffusionAnalysis& A) {
    if (!A.mass().holds()) return detail::diff_prerequisite(A.mass());
    const DiffusionModel& m = A.model();
    const double log_Z = A.mass().log_quantity;
    const double top = std::min(1e6, A.x_max());
    auto value = [&](double x) {
        const double cx = A.c_interp(x);
        const QuadratureOptions opt{std::max(1e-10, 1e-15 * std::fabs(cx))};
        const double drift = std::fabs(m.drift(x));
        const double s = drift > 0.0 ? std::clamp(m.diffusion(x) / drift, 1e-12 * x, x) : x;
        const double up = detail::panel_sum(
            [&](double u) { return std::exp(A.c_interp(u) - cx) / m.diffusion(u); }, x, s, A.x_max(), opt);
        const double down = detail::panel_sum([&](double u) { return std::exp(cx - A.c_interp(u)); }, x, -s, 0.0, opt);
        if (!(up > 0.0) || !(down > 0.0)) return kNegInf;
        return std::log(up) + std::log(down) - log_Z;
    };
    std::vector<double> xs;
    for (int k = 0; k <= 9 * 64; ++k) {
        const double x = std::pow(10.0, -3.0 + k / 64.0);
        if (x > top) break;
        xs.push_back(x);
    }
    std::vector<double> vals(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) vals[i] = value(xs[i]);
    const std::size_t arg = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
    Verdict v;
    v.outcome = Outcome::Holds;
    v.reason = Reason::Converged;
    v.set_quantity(vals[arg]);
    v.argmax = xs[arg];
    if (arg > 0 && arg + 1 < xs.size()) {
        auto [xr, vr] = detail::golden_max(value, xs[arg - 1], xs[arg + 1]);
        if (vr > vals[arg]) {
            v.set_quantity(vr);
            v.argmax = xr;
        }
    } else if (arg + 1 == xs.size()) {
        v.note = "supremum at the grid edge";
    }
    return v;
}

/// Bracket [(4 delta)^-1, delta^-1]. For lambda_1 a non-ergodic model has gap 0.
inline GapEstimate gap_bounds_diff(const DiffusionAnalysis& A, Gap which) {
    GapEstimate g = GapEstimate::from_delta(delta_diff(A));
    if (g.status == GapStatus::Infinite) g.notes.push_back("delta infinite: gap 0");
    if (g.status == GapStatus::Finite) {
        g.notes.push_back("upper bound uses delta; delta' <= 2 delta could tighten it");
        if (which == Gap::Lambda1) g.notes.push_back("upper bound delta^-1 is stated for lambda_0");
    }
    return g;
}

/// f(x) = sqrt(int_0^x e^{-C}).
inline std::function<double(double)> representative_f(const DiffusionAnalysis& A) {
    return [A](double x) {
        if (!(x >= 0.0)) throw DomainError("representative function needs x >= 0");
        if (x == 0.0) return 0.0;
        return std::exp(0.5 * A.log_scale_fast(x));
    };
}

namespace detail {

inline double central_diff(const std::function<double(double)>& f, double x) {
    const double h = std::max(1e-6, 1e-6 * std::fabs(x));
    if (x - h < 0.0) return (f(x + h) - f(x)) / h;
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace detail

struct VariationalGrid {
    double lo = 1e-3;
    double hi = 1e6;
};

struct DiffVariationalBound {
    double value = 0.0;      // approximate inf_x I(f)(x)^-1
    double argmin = 0.0;
    double shift = 0.0;      // constant added to f so that pi(f) >= 0
    std::size_t grid_points = 0;
    bool refined = false;
    bool vacuous = false;    // int f e^C / a diverged
    std::string note;
};

/// A test function in log form: f(x) as a signed log and log f'(x).
struct LogTestFunction {
    std::function<SignedLog(double)> f;
    std::function<double(double)> log_df;
};

/// inf_x f'(x) e^{C(x)} / int_x^inf f e^C/a over the nodes inside `grid`, refined
/// by golden section around the grid argmin.
inline DiffVariationalBound variational_lower_diff(const DiffusionAnalysis& A, const LogTestFunction& tf,
                                                   VariationalGrid grid = {}) {
    if (!(grid.lo > 0.0) || !(grid.hi > grid.lo)) throw InvalidArgument("bad variational grid");
    const Verdict& mass = A.mass();
    if (!mass.holds()) throw InvalidArgument("variational bound needs a finite total mass");
    const auto& t = A.tables();
    const DiffusionModel& m = A.model();
    const std::size_t K = A.last();
    DiffVariationalBound out;

    // signed integrals of f e^{C - C_k} / a over [lo, hi] inside panel k
    auto expo = [&](std::size_t k, double u) {
        const SignedLog fu = tf.f(u);
        return fu.sign == 0 ? kNegInf : fu.log_abs + A.c_rel(k, u);
    };
    auto piece = [&](std::size_t k, double lo, double hi) {
        const double shift = std::max({expo(k, lo), expo(k, 0.5 * (lo + hi)), expo(k, hi)});
        if (shift == kNegInf) return SignedLog{};
        // exponents are only known to about 1e-16 of their size
        const SignedLog f_lo = tf.f(lo);
        const double mag = std::fabs(t.C[k]) + (f_lo.sign == 0 ? 0.0 : std::fabs(f_lo.log_abs));
        const double tol = std::max(t.grid.tol, 1e-15 * mag);
        auto r = integrate(
            [&](double u) {
                const SignedLog fu = tf.f(u);
                if (fu.sign == 0) return 0.0;
                return fu.sign * std::exp(fu.log_abs + A.c_rel(k, u) - shift) / m.diffusion(u);
            },
            lo, hi, {tol});
        return SignedLog::from(r.value) * SignedLog::from_log(shift);
    };
    std::vector<SignedLog> panels(K);
    std::vector<double> log_abs_cum(K + 1, kNegInf);
    for (std::size_t k = 0; k < K; ++k) {
        panels[k] = piece(k, t.x[k], t.x[k + 1]);
        const double la = panels[k].sign == 0 ? kNegInf : panels[k].log_abs + t.C[k];
        log_abs_cum[k + 1] = log_add_exp(log_abs_cum[k], la);
    }
    std::vector<Probe> probes;
    for (std::size_t i : t.dyadic) probes.push_back({t.x[i], log_abs_cum[i]});
    const Verdict conv = decide_series(std::move(probes));
    if (conv.fails()) {
        out.vacuous = true;
        out.note = "int f e^C/a diverges";
        return out;
    }
    if (conv.inconclusive()) out.note = "convergence of int f e^C/a undecided";

    // tail[k] = int_{x_k}^inf f e^{C - C_k} / a
    std::vector<SignedLog> tail(K + 1);
    if (conv.log_remainder > kNegInf)
        tail[K] = SignedLog{tf.f(t.x[K]).sign < 0 ? -1 : 1, conv.log_remainder - t.C[K]};
    for (std::size_t k = K; k-- > 0;) tail[k] = tail[k + 1] * SignedLog::from_log(t.dC[k]) + panels[k];

    // centering; C(0) = 0 so tail[0] is pi(f) Z
    if (tail[0].sign < 0) out.shift = std::exp(tail[0].log_abs - mass.log_quantity);
    auto shifted = [&](SignedLog raw, double rel_T) {
        return out.shift == 0.0 ? raw : raw + SignedLog::from(out.shift) * SignedLog::from_log(rel_T);
    };
    auto log_ratio = [&](double x, SignedLog tl) {
        const double ld = tf.log_df(x);
        if (std::isnan(ld) || ld == kNegInf)
            throw InvalidArgument("test function not strictly increasing near x=" + std::to_string(x));
        if (tl.sign <= 0)
            throw InvalidArgument("tail integral of the test function is not positive at x=" + std::to_string(x));
        return ld - tl.log_abs;
    };

    double best = kInf;
    std::size_t arg = 0;
    const double hi = std::min(grid.hi, t.x[K]);
    for (std::size_t i = 1; i <= K; ++i) {
        if (t.x[i] < grid.lo || t.x[i] > hi) continue;
        ++out.grid_points;
        const double v = log_ratio(t.x[i], shifted(tail[i], t.rel_T[i]));
        if (v < best) {
            best = v;
            arg = i;
        }
    }
    if (out.grid_points == 0) throw InvalidArgument("variational grid contains no nodes");
    out.argmin = t.x[arg];
    if (arg > 1 && arg < K && t.x[arg - 1] >= grid.lo && t.x[arg + 1] <= hi) {
        auto at = [&](double x) {
            const std::size_t k = A.panel_of(x);
            SignedLog raw = tail[k + 1] * SignedLog::from_log(t.dC[k]) + piece(k, x, t.x[k + 1]);
            raw = raw * SignedLog::from_log(-A.c_rel(k, x));
            return -log_ratio(x, shifted(raw, A.tail_rel_at(x)));
        };
        auto [xr, vr] = detail::golden_max(at, t.x[arg - 1], t.x[arg + 1]);
        out.refined = true;
        if (-vr < best) {
            best = -vr;
            out.argmin = xr;
        }
    }
    out.value = std::exp(best);
    return out;
}

/// Plain test function; f' by central differences.
inline DiffVariationalBound variational_lower_diff(const DiffusionAnalysis& A, const std::function<double(double)>& f,
                                                   VariationalGrid grid = {}) {
    LogTestFunction tf{[&f](double x) {
                           const double v = f(x);
                           if (!std::isfinite(v))
                               throw InvalidArgument("test function not finite at x=" + std::to_string(x));
                           return SignedLog::from(v);
                       },
                       [&f](double x) {
                           const double d = detail::central_diff(f, x);
                           return d > 0.0 ? std::log(d) : kNegInf;
                       }};
    return variational_lower_diff(A, tf, grid);
}

/// The representative function sqrt(int_0^x e^{-C}) in log form, exact derivative.
inline LogTestFunction representative_log_f(const DiffusionAnalysis& A) {
    return {[A](double x) { return x > 0.0 ? SignedLog::from_log(0.5 * A.log_scale_fast(x)) : SignedLog{}; },
            [A](double x) { return -A.c_interp(x) - std::log(2.0) - 0.5 * A.log_scale_fast(x); }};
}

inline DiffVariationalBound representative_lower_diff(const DiffusionAnalysis& A, VariationalGrid grid = {}) {
    return variational_lower_diff(A, representative_log_f(A), grid);
}

/// D(f) = int_0^upper f'^2 e^C / Z.
inline QuadratureResult dirichlet_form(const DiffusionAnalysis& A, const std::function<double(double)>& f,
                                       double upper = kInf, double tol = 1e-9) {
    if (!A.mass().holds()) throw InvalidArgument("Dirichlet form needs a finite total mass");
    const double log_Z = A.mass().log_quantity;
    return integrate(
        [&](double x) {
            const double d = detail::central_diff(f, x);
            if (d == 0.0) return 0.0;
            return d * d * std::exp(A.c_interp(x) - log_Z);
        },
        0.0, upper, {tol});
}

/// pi(f^2) - pi(f)^2 over [0, upper].
inline double variance(const DiffusionAnalysis& A, const std::function<double(double)>& f, double upper = kInf,
                       double tol = 1e-9) {
    if (!A.mass().holds()) throw InvalidArgument("variance needs a finite total mass");
    const DiffusionModel& m = A.model();
    const double log_Z = A.mass().log_quantity;
    auto dens = [&](double x) { return std::exp(A.c_interp(x) - log_Z) / m.diffusion(x); };
    const double m1 = integrate([&](double x) { return f(x) * dens(x); }, 0.0, upper, {tol}).value;
    const double m2 = integrate([&](double x) { return f(x) * f(x) * dens(x); }, 0.0, upper, {tol}).value;
    return std::max(0.0, m2 - m1 * m1);
}

namespace detail {

/// Divergence-form finite differences on [0, L] with N cells:
/// -Lf = -(a e^{-C}) (e^C f')', fluxes e^C at half nodes, weights e^C/a.
inline double fd_gap(const DiffusionModel& m, double L, std::size_t N, Gap which) {
    const double h = L / static_cast<double>(N);
    // C on the half grid
    std::vector<double> C(2 * N + 1, 0.0);
    auto ratio = [&m](double u) { return m.drift(u) / m.diffusion(u); };
    for (std::size_t j = 0; j < 2 * N; ++j) {
        const double lo = 0.5 * h * static_cast<double>(j), hi = 0.5 * h * static_cast<double>(j + 1);
        C[j + 1] = C[j] + integrate(ratio, lo, hi, {1e-12}).value;
    }
    auto Cn = [&](std::size_t j) { return C[2 * j]; };
    auto Ch = [&](std::size_t j) { return C[2 * j + 1]; };  // at (j + 1/2) h
    std::vector<double> log_w(N + 1);
    for (std::size_t j = 0; j <= N; ++j) {
        const double a = m.diffusion(h * static_cast<double>(j));
        double vol = (j == 0 || j == N) ? 0.5 * h : h;
        log_w[j] = Cn(j) - std::log(a) + std::log(vol);
    }
    const std::size_t first = which == Gap::Lambda0 ? 1 : 0;
    std::vector<double> d, e;
    for (std::size_t j = first; j <= N; ++j) {
        double s = 0.0;
        if (j > 0) s += std::exp(Ch(j - 1) - log_w[j]);
        if (j < N) s += std::exp(Ch(j) - log_w[j]);
        d.push_back(s / h);
        if (j < N) e.push_back(-std::exp(Ch(j) - 0.5 * (log_w[j] + log_w[j + 1])) / h);
    }
    TridiagonalMatrix T(std::move(d), std::move(e));
    if (which == Gap::Lambda0) return kth_eigenvalue(T, 0);
    const double l0 = kth_eigenvalue(T, 0);
    if (std::fabs(l0) > 1e-6 * std::max(1.0, T.scale()))
        throw Error("reflecting discretization: smallest eigenvalue " + std::to_string(l0) + " is not 0");
    return kth_eigenvalue(T, 1);
}

}  // namespace detail

/// lambda_0 (Dirichlet at 0) or lambda_1 (Neumann at 0) from finite differences on
/// [0, L], Neumann at L. Value is the Richardson combination of the N and 2N grids;
/// error is their difference.
inline OracleResult fd_gap_oracle(const DiffusionAnalysis& A, double L, std::size_t N, Gap which) {
    if (N < 64) throw InvalidArgument("finite-difference oracle needs N >= 64");
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("cutoff L must be positive");
    if (!A.mass().holds()) throw InvalidArgument("cutoff check needs a finite total mass");
    const double rel = std::exp(A.log_tail_at(L) - A.mass().log_quantity);
    if (!(rel < 1e-8))
        throw InvalidArgument("cutoff too small: mu[L,inf)/mu[0,inf) = " + std::to_string(rel));
    const double coarse = detail::fd_gap(A.model(), L, N, which);
    const double fine = detail::fd_gap(A.model(), L, 2 * N, which);
    OracleResult r;
    r.size = N;
    r.value = fine + (fine - coarse) / 3.0;
    r.error = std::fabs(fine - coarse);
    return r;
}

/// Cutoff for fd_gap_oracle: four times the smallest power of two L with
/// mu[L,inf)/mu[0,inf) < 1e-8.
inline double oracle_cutoff(const DiffusionAnalysis& A) {
    if (!A.mass().holds()) throw InvalidArgument("cutoff choice needs a finite total mass");
    for (double L = 1.0; L <= A.x_max(); L *= 2.0)
        if (A.log_tail_at(L) - A.mass().log_quantity < std::log(1e-8)) return 4.0 * L;
    throw InvalidArgument("no cutoff inside the grid leaves a tail below 1e-8");
}

struct DiffusionReport {
    VerdictTable rows;
    GapEstimate gap_l0, gap_l1;
    std::optional<double> nu;
    bool lattice_closure_applied = false;
    std::vector<std::pair<Property, Property>> contradictions;
    std::vector<std::string> notes;

    const Verdict& at(Property p) const {
        const auto& r = row(rows, p);
        if (!r) throw InvalidArgument("row not evaluated: " + std::string(property_name(p, true)));
        return *r;
    }
    bool consistent() const { return contradictions.empty(); }
};

inline DiffusionReport criteria_diff(const DiffusionAnalysis& A, std::optional<double> nu = std::nullopt) {
    DiffusionReport rep;
    rep.nu = nu;
    std::vector<RowTask> tasks = {
        {Property::Uniqueness, [&A] { return uniqueness(A); }},
        {Property::Recurrence, [&A] { return recurrence(A); }},
        {Property::Ergodicity, [&A] { return ergodicity(A); }},
        {Property::Exponential, [&A] { return poincare(A); }},
        {Property::DiscreteSpectrum, [&A] { return discrete_spectrum(A); }},
        {Property::LogSobolev, [&A] { return log_sobolev(A); }},
        {Property::Strong, [&A] { return strong_ergodicity(A); }},
    };
    if (nu) tasks.push_back({Property::Nash, [&A, v = *nu] { return nash(A, v); }});
    rep.rows = evaluate_rows(tasks);
    rep.contradictions = contradictions(rep.rows);
    rep.lattice_closure_applied = close_lattice(rep.rows, true);
    rep.gap_l0 = gap_bounds_diff(A, Gap::Lambda0);
    rep.gap_l1 = gap_bounds_diff(A, Gap::Lambda1);
    if (!A.mass().holds()) {
        rep.gap_l1 = GapEstimate{};
        if (A.mass().fails()) {
            rep.gap_l1.status = GapStatus::Infinite;
            rep.gap_l1.delta = kInf;
            rep.gap_l1.lower = rep.gap_l1.upper = 0.0;
            rep.gap_l1.notes.push_back("not ergodic: lambda_1 = 0");
        }
    }
    if (A.tables().unconverged > 0)
        rep.notes.push_back(std::to_string(A.tables().unconverged) + " quadrature panels did not converge");
    return rep;
}

inline DiffusionReport criteria_diff(const DiffusionModel& m, std::optional<double> nu = std::nullopt,
                                     const Budget& budget = Budget::from_env()) {
    return criteria_diff(DiffusionAnalysis(m, budget), nu);
}

}  // namespace ergokit
