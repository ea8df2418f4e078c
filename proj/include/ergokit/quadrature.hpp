#pragma once

// Adaptive Simpson quadrature, with [lo, inf) mapped to [0, 1) by
// u = lo + s / (1 - s).

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>

#include "ergokit/errors.hpp"

namespace ergokit {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
    bool converged = true;
};

struct QuadratureOptions {
    double tol = 1e-10;           // relative
    int max_depth = 50;
    std::size_t max_evaluations = 2'000'000;
};

namespace detail {

struct Simpson {
    const std::function<double(double)>& f;
    QuadratureOptions opt;
    QuadratureResult res;

    double eval(double x) {
        ++res.evaluations;
        double v = f(x);
        if (!std::isfinite(v)) throw DomainError("nonfinite integrand at x=" + std::to_string(x));
        return v;
    }

    // returns refined estimate for [a,b] given endpoint/midpoint samples
    double step(double a, double b, double fa, double fm, double fb, double whole, double abs_tol, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = eval(lm), frm = eval(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double diff = left + right - whole;
        if (std::fabs(diff) <= 15.0 * abs_tol || depth >= opt.max_depth || res.evaluations >= opt.max_evaluations ||
            !(lm > a && m > lm && rm > m && b > rm)) {
            res.error_estimate += std::fabs(diff) / 15.0;
            return left + right + diff / 15.0;
        }
        // halve the budget per level, but not below 2^-12 of the top-level one
        const double sub = depth < 12 ? abs_tol / 2 : abs_tol;
        return step(a, m, fa, flm, fm, left, sub, depth + 1) + step(m, b, fm, frm, fb, right, sub, depth + 1);
    }
};

inline QuadratureResult simpson_finite(const std::function<double(double)>& f, double lo, double hi,
                                       const QuadratureOptions& opt) {
    Simpson s{f, opt, {}};
    if (hi == lo) return s.res;
    const double fa = s.eval(lo), fb = s.eval(hi), fm = s.eval(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    // first pass with an absolute tolerance from a coarse estimate, then tighten
    double scale = std::fabs(whole);
    double v = 0.0;
    for (int pass = 0; pass < 3; ++pass) {
        s.res.error_estimate = 0.0;
        s.res.converged = true;
        v = s.step(lo, hi, fa, fm, fb, whole, opt.tol * std::max(scale, 1e-300), 0);
        if (std::fabs(v) >= 0.5 * scale || std::fabs(v) == 0.0) break;
        scale = std::fabs(v);
    }
    s.res.value = v;
    if (s.res.converged && s.res.error_estimate > opt.tol * std::max(1.0, std::fabs(v)))
        s.res.converged = false;
    return s.res;
}

}  // namespace detail

/// Integral of f over [lo, hi]; hi may be +inf. The tolerance is relative.
inline QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                                  QuadratureOptions opt = {}) {
    if (!(opt.tol > 0.0)) throw InvalidArgument("quadrature tolerance must be positive");
    if (std::isnan(lo) || std::isnan(hi) || !std::isfinite(lo)) throw InvalidArgument("bad integration interval");
    if (hi < lo) {
        auto r = integrate(f, hi, lo, opt);
        r.value = -r.value;
        return r;
    }
    if (std::isfinite(hi)) return detail::simpson_finite(f, lo, hi, opt);
    std::function<double(double)> g = [&f, lo](double s) {
        if (s >= 1.0) return 0.0;
        const double u = lo + s / (1.0 - s);
        const double j = 1.0 / ((1.0 - s) * (1.0 - s));
        const double v = f(u);
        if (v == 0.0) return 0.0;
        const double out = v * j;
        // limit-safe near s = 1: a decaying integrand times a blowing-up jacobian
        if (!std::isfinite(out) && std::isfinite(v) && std::fabs(v) < 1e-300) return 0.0;
        return out;
    };
    return detail::simpson_finite(g, 0.0, 1.0, opt);
}

}  // namespace ergokit
