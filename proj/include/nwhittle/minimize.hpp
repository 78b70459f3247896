#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include <boost/math/tools/minima.hpp>

#include "nwhittle/error.hpp"

namespace nwhittle {

struct MinimizeOptions {
    double abs_tol = 1e-6;
    int prescan_points = 64;
    std::uintmax_t max_iterations = 500;
};

struct MinimumPoint {
    double x = 0.0;
    double fx = 0.0;
    std::uintmax_t iterations = 0;
};

/// Minimises a 1-D function on [lo, hi]: a uniform pre-scan picks the bracket around
/// the smallest sampled value, then Brent's method (golden section with parabolic
/// steps) refines it to abs_tol. Non-finite values count as +infinity.
template <class F>
MinimumPoint minimize_on_interval(const F& f, double lo, double hi, const MinimizeOptions& opt = {}) {
    detail::require(lo < hi, "minimisation interval must satisfy lo < hi");
    detail::require(opt.abs_tol > 0.0, "minimisation tolerance must be positive");
    const int n = std::max(opt.prescan_points, 3);
    auto safe = [&f](double x) {
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    const double step = (hi - lo) / (n - 1);
    int best = -1;
    double best_f = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double x = (i == n - 1) ? hi : lo + i * step;
        const double v = safe(x);
        if (v < best_f) {
            best_f = v;
            best = i;
        }
    }
    if (best < 0) throw EstimationError("objective is not finite anywhere on the search interval");

    const double a = (best == 0) ? lo : lo + (best - 1) * step;
    const double b = (best == n - 1) ? hi : std::min(hi, lo + (best + 1) * step);

    // Boost's stopping rule is relative: |x - x*| <~ 2^{2-bits} |x|.
    const double scale = std::max({std::fabs(lo), std::fabs(hi), 1.0});
    int bits = static_cast<int>(std::ceil(std::log2(4.0 * scale / opt.abs_tol))) + 1;
    bits = std::clamp(bits, 8, std::numeric_limits<double>::digits);

    std::uintmax_t iters = opt.max_iterations;
    const auto r = boost::math::tools::brent_find_minima(safe, a, b, bits, iters);

    MinimumPoint out{r.first, r.second, iters};
    const double x_best = (best == n - 1) ? hi : lo + best * step;
    if (best_f < out.fx) {
        out.x = x_best;
        out.fx = best_f;
    }
    return out;
}

}  // namespace nwhittle
