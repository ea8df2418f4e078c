#pragma once

// Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "ergokit/errors.hpp"

namespace ergokit {

struct TridiagonalMatrix {
    std::vector<double> diag;     // length N
    std::vector<double> offdiag;  // length N-1

    TridiagonalMatrix() = default;
    TridiagonalMatrix(std::vector<double> d, std::vector<double> e) : diag(std::move(d)), offdiag(std::move(e)) {
        validate();
    }

    std::size_t size() const { return diag.size(); }

    void validate() const {
        if (diag.empty()) throw InvalidArgument("tridiagonal matrix is empty");
        if (offdiag.size() + 1 != diag.size()) throw InvalidArgument("offdiag must have length N-1");
        for (double v : diag)
            if (!std::isfinite(v)) throw InvalidArgument("nonfinite diagonal entry");
        for (double v : offdiag)
            if (!std::isfinite(v)) throw InvalidArgument("nonfinite off-diagonal entry");
    }

    /// Gershgorin interval containing the whole spectrum.
    std::pair<double, double> gershgorin() const {
        double lo = diag[0], hi = diag[0];
        for (std::size_t i = 0; i < diag.size(); ++i) {
            double r = (i > 0 ? std::fabs(offdiag[i - 1]) : 0.0) + (i + 1 < diag.size() ? std::fabs(offdiag[i]) : 0.0);
            lo = std::min(lo, diag[i] - r);
            hi = std::max(hi, diag[i] + r);
        }
        return {lo, hi};
    }

    double scale() const {
        double s = 0.0;
        for (double v : diag) s = std::max(s, std::fabs(v));
        for (double v : offdiag) s = std::max(s, std::fabs(v));
        return s;
    }
};

/// Number of eigenvalues strictly less than x.
inline std::size_t sturm_count(const TridiagonalMatrix& T, double x) {
    const double omega = 1e-300 * std::max(1.0, T.scale());
    std::size_t count = 0;
    double d = 1.0;
    for (std::size_t k = 0; k < T.size(); ++k) {
        const double e2 = k == 0 ? 0.0 : T.offdiag[k - 1] * T.offdiag[k - 1];
        d = (T.diag[k] - x) - (k == 0 ? 0.0 : e2 / d);
        if (std::fabs(d) < omega) d = -omega;
        if (d < 0.0) ++count;
    }
    return count;
}

/// k-th smallest eigenvalue (0-based), bisection until the bracket is narrower
/// than tol * max(1, |midpoint|).
inline double kth_eigenvalue(const TridiagonalMatrix& T, std::size_t k, double tol = 1e-13) {
    if (k >= T.size()) throw InvalidArgument("eigenvalue index out of range");
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    auto [lo, hi] = T.gershgorin();
    const double pad = 1e-15 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
    lo -= pad;
    hi += pad;
    for (int it = 0; it < 4000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo < tol * std::max(1.0, std::fabs(mid))) break;
        if (mid <= lo || mid >= hi) break;
        if (sturm_count(T, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// All eigenvalues in nondecreasing order.
inline std::vector<double> eigenvalues(const TridiagonalMatrix& T, double tol = 1e-13) {
    std::vector<double> out(T.size());
    for (std::size_t k = 0; k < T.size(); ++k) out[k] = kth_eigenvalue(T, k, tol);
    for (std::size_t k = 1; k < out.size(); ++k) out[k] = std::max(out[k], out[k - 1]);
    return out;
}

}  // namespace ergokit
