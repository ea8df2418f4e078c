#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace ergokit {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(e^a + e^b) without overflow; either argument may be -inf.
inline double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    if (a == kInf || b == kInf) return kInf;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

/// A real number stored as sign * exp(log_abs). sign is -1, 0 or +1.
struct SignedLog {
    int sign = 0;
    double log_abs = kNegInf;

    static SignedLog from(double v) {
        if (v == 0.0) return {};
        return {v > 0 ? 1 : -1, std::log(std::fabs(v))};
    }
    static SignedLog from_log(double log_abs) { return {1, log_abs}; }

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
    bool positive() const { return sign > 0; }

    friend SignedLog operator*(SignedLog l, SignedLog r) {
        if (l.sign == 0 || r.sign == 0) return {};
        return {l.sign * r.sign, l.log_abs + r.log_abs};
    }
    friend SignedLog operator-(SignedLog v) { return {-v.sign, v.log_abs}; }

    friend SignedLog operator+(SignedLog l, SignedLog r) {
        if (l.sign == 0) return r;
        if (r.sign == 0) return l;
        if (l.sign == r.sign) return {l.sign, log_add_exp(l.log_abs, r.log_abs)};
        // opposite signs: magnitude is |e^hi - e^lo|
        const bool left_big = l.log_abs >= r.log_abs;
        const SignedLog& big = left_big ? l : r;
        const SignedLog& small = left_big ? r : l;
        const double d = small.log_abs - big.log_abs;
        if (d == 0.0) return {};
        return {big.sign, big.log_abs + std::log1p(-std::exp(d))};
    }
    friend SignedLog operator-(SignedLog l, SignedLog r) { return l + (-r); }

    /// Total order consistent with the represented values.
    friend bool operator<(SignedLog l, SignedLog r) {
        if (l.sign != r.sign) return l.sign < r.sign;
        if (l.sign == 0) return false;
        return l.sign > 0 ? l.log_abs < r.log_abs : l.log_abs > r.log_abs;
    }
    friend bool operator==(SignedLog l, SignedLog r) {
        return l.sign == r.sign && (l.sign == 0 || l.log_abs == r.log_abs);
    }
};

}  // namespace ergokit
