#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ergokit/errors.hpp"
#include "ergokit/logmath.hpp"
#include "ergokit/model.hpp"
#include "ergokit/verdict.hpp"

namespace ergokit {

/// The mu-ladder of a birth-death chain:
///   mu_0 = 1,  mu_n = mu_{n-1} * b_{n-1} / a_n,
/// together with the scale weights 1/(mu_j b_j), prefix sums and tails up to
/// the budget horizon. Everything is kept in the log domain; linear values are
/// kept alongside while they stay inside [1e-300, 1e300].
///
/// Tables are filled once (thread-safe) and immutable afterwards. Indices
/// beyond the horizon are served by an on-demand cache guarded by a mutex.
class MuLadder {
public:
    struct Tables {
        std::size_t horizon = 0;
        std::vector<double> log_b, log_a;      // log_a[0] unused
        std::vector<double> log_mu;            // n = 0..horizon
        std::vector<double> mu;                // linear, NaN when out of range
        std::vector<double> log_scale;         // log 1/(mu_j b_j)
        std::vector<double> log_prefix_mu;     // log mu[0,n]
        std::vector<double> log_prefix_scale;  // log sum_{j<n} 1/(mu_j b_j); -inf at n=0
        std::vector<double> lin_prefix_mu;     // compensated linear mu[0,n], NaN once out of range
        std::vector<double> log_tail;          // log mu[n,inf); empty unless mass finite
        Verdict mass;                          // total-mass verdict
    };

    explicit MuLadder(BirthDeathModel model, Budget budget = {}) : model_(std::move(model)), budget_(budget) {}

    MuLadder(const MuLadder&) = delete;
    MuLadder& operator=(const MuLadder&) = delete;

    const BirthDeathModel& model() const { return model_; }
    const Budget& budget() const { return budget_; }
    std::size_t horizon() const { return budget_.horizon(); }

    const Tables& tables() const {
        std::call_once(once_, [this] { build(); });
        return tables_;
    }

    /// log mu_n for any n; extends the cache on demand.
    double log_mu(std::size_t n) const {
        const Tables& t = tables();
        if (n <= t.horizon) return t.log_mu[n];
        std::lock_guard lock(extra_mutex_);
        if (extra_log_mu_.empty()) extra_log_mu_.push_back(t.log_mu[t.horizon]);
        while (t.horizon + extra_log_mu_.size() <= n) {
            std::size_t m = t.horizon + extra_log_mu_.size();
            extra_log_mu_.push_back(extra_log_mu_.back() + model_.log_birth(m - 1) - model_.log_death(m));
        }
        return extra_log_mu_[n - t.horizon];
    }

    /// mu_n in the linear domain. Throws RangeError outside [1e-300, 1e300].
    double mu(std::size_t n) const {
        const Tables& t = tables();
        if (n <= t.horizon && !std::isnan(t.mu[n])) return t.mu[n];
        double l = log_mu(n);
        if (l < std::log(1e-300) || l > std::log(1e300))
            throw RangeError("mu_" + std::to_string(n) + " outside linear range (log mu = " + std::to_string(l) + ")");
        return std::exp(l);
    }

    /// mu[i,k] = sum_{i <= j <= k} mu_j, summed directly.
    double mu_segment(std::size_t i, std::size_t k) const {
        if (i > k) throw InvalidArgument("mu_segment requires i <= k");
        double s = 0.0, c = 0.0;
        for (std::size_t j = i; j <= k; ++j) neumaier(s, c, mu(j));
        return s + c;
    }

    double log_mu_segment(std::size_t i, std::size_t k) const {
        if (i > k) throw InvalidArgument("mu_segment requires i <= k");
        double acc = kNegInf;
        for (std::size_t j = i; j <= k; ++j) acc = log_add_exp(acc, log_mu(j));
        return acc;
    }

    /// Total-mass verdict for mu[0, inf).
    const Verdict& mass() const { return tables().mass; }

    bool mass_finite() const { return mass().holds(); }

    /// log mu[n, inf) for n <= horizon; requires finite mass.
    double log_tail(std::size_t n) const {
        const Tables& t = tables();
        if (!t.mass.holds()) throw InvalidArgument("tail requested but total mass is not finite");
        if (n > t.horizon) throw InvalidArgument("tail index beyond ladder horizon");
        return t.log_tail[n];
    }

    /// mu[n, inf) in the linear domain. Uses total - mu[0,n-1] when that is well
    /// conditioned, the backward tail sum otherwise.
    double tail(std::size_t n) const {
        const Tables& t = tables();
        const double lt = log_tail(n);
        const double total_lin = t.lin_prefix_mu[t.horizon - 1];
        const double before = n == 0 ? 0.0 : t.lin_prefix_mu[n - 1];
        if (!std::isnan(total_lin) && !std::isnan(before)) {
            const double total = total_lin + std::exp(t.mass.log_remainder);
            const double diff = total - before;
            if (diff > 1e-6 * total) return diff;
        }
        return std::exp(lt);
    }

private:
    static void neumaier(double& s, double& c, double x) {
        double t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }

    void build() const {
        Tables& t = tables_;
        const std::size_t H = budget_.horizon();
        t.horizon = H;
        t.log_b.resize(H + 1);
        t.log_a.assign(H + 1, kNegInf);
        t.log_mu.resize(H + 1);
        t.mu.resize(H + 1);
        t.log_scale.resize(H + 1);
        t.log_prefix_mu.resize(H + 1);
        t.log_prefix_scale.resize(H + 2);
        t.lin_prefix_mu.resize(H + 1);

        const double lo = std::log(1e-300), hi = std::log(1e300);
        double lin_sum = 0.0, lin_c = 0.0;
        bool lin_ok = true;
        t.log_prefix_scale[0] = kNegInf;
        for (std::size_t n = 0; n <= H; ++n) {
            t.log_b[n] = model_.log_birth(n);
            if (n == 0) {
                t.log_mu[0] = 0.0;
                t.mu[0] = 1.0;
            } else {
                t.log_a[n] = model_.log_death(n);
                t.log_mu[n] = t.log_mu[n - 1] + t.log_b[n - 1] - t.log_a[n];
                double lin = kNaN;
                if (!std::isnan(t.mu[n - 1])) {
                    lin = t.mu[n - 1] * model_.birth_rate(n - 1) / model_.death_rate(n);
                } else if (t.log_mu[n] >= lo && t.log_mu[n] <= hi) {
                    lin = std::exp(t.log_mu[n]);
                }
                if (!(lin >= 1e-300 && lin <= 1e300)) lin = kNaN;
                t.mu[n] = lin;
            }
            t.log_scale[n] = -t.log_mu[n] - t.log_b[n];
            t.log_prefix_mu[n] = n == 0 ? 0.0 : log_add_exp(t.log_prefix_mu[n - 1], t.log_mu[n]);
            t.log_prefix_scale[n + 1] = log_add_exp(t.log_prefix_scale[n], t.log_scale[n]);
            if (std::isnan(t.mu[n])) {
                // terms below 1e-300 do not disturb a sum that already holds mu_0 = 1
                if (t.log_mu[n] > lo) lin_ok = false;
            } else {
                neumaier(lin_sum, lin_c, t.mu[n]);
            }
            t.lin_prefix_mu[n] = lin_ok ? lin_sum + lin_c : kNaN;
        }

        t.mass = series_verdict_log([&t](std::size_t n) { return t.log_mu[n]; }, budget_);
        if (t.mass.holds()) {
            t.log_tail.assign(H + 1, kNegInf);
            double acc = t.mass.log_remainder;
            for (std::size_t n = H; n-- > 0;) {
                acc = log_add_exp(acc, t.log_mu[n]);
                t.log_tail[n] = acc;
            }
            t.log_tail[H] = log_add_exp(t.mass.log_remainder, kNegInf);
        }
    }

    static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

    BirthDeathModel model_;
    Budget budget_;
    mutable std::once_flag once_;
    mutable Tables tables_;
    mutable std::mutex extra_mutex_;
    mutable std::vector<double> extra_log_mu_;
};

}  // namespace ergokit
