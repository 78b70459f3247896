#pragma once

#include <cmath>
#include <limits>

#include "nwhittle/error.hpp"

namespace nwhittle {

struct QuadratureOptions {
    double abs_tol = 1e-12;
    int max_depth = 48;
    /// Number of equal panels the interval is cut into before adapting. Guards
    /// against a coarse first estimate that happens to look converged.
    int initial_panels = 8;
};

namespace detail {

template <class F>
class AdaptiveSimpson {
public:
    AdaptiveSimpson(const F& f, const QuadratureOptions& opt) : f_(f), opt_(opt) {}

    double run(double a, double b) {
        const int n = opt_.initial_panels > 0 ? opt_.initial_panels : 1;
        const double h = (b - a) / n;
        const double panel_tol = opt_.abs_tol / n;
        double total = 0.0;
        double fa = f_(a);
        for (int i = 0; i < n; ++i) {
            const double x0 = a + i * h;
            const double x1 = (i + 1 == n) ? b : a + (i + 1) * h;
            const double xm = 0.5 * (x0 + x1);
            const double fm = f_(xm);
            const double fb = f_(x1);
            const double whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
            total += refine(x0, x1, fa, fm, fb, whole, panel_tol, 0);
            fa = fb;
        }
        return total;
    }

    double unresolved() const { return unresolved_; }

private:
    double refine(double a, double b, double fa, double fm, double fb, double whole, double tol,
                  int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const double flm = f_(lm);
        const double frm = f_(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        // Below this the Richardson estimate is dominated by rounding.
        const double floor_tol = 64.0 * std::numeric_limits<double>::epsilon() *
                                 (std::fabs(left) + std::fabs(right));
        if (std::fabs(delta) <= 15.0 * std::fmax(tol, floor_tol) || m <= a || b <= m) {
            return left + right + delta / 15.0;
        }
        if (depth >= opt_.max_depth) {
            unresolved_ += std::fabs(delta) / 15.0;
            return left + right + delta / 15.0;
        }
        return refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
               refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }

    const F& f_;
    QuadratureOptions opt_;
    double unresolved_ = 0.0;
};

}  // namespace detail

/// Adaptive Simpson integral of f over [a, b] to an absolute tolerance.
/// Throws QuadratureError if the depth limit leaves more than abs_tol unresolved.
template <class F>
double integrate(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
    detail::require(opt.abs_tol > 0.0, "quadrature tolerance must be positive");
    if (a == b) return 0.0;
    if (b < a) return -integrate(f, b, a, opt);
    detail::AdaptiveSimpson<F> engine(f, opt);
    const double value = engine.run(a, b);
    if (engine.unresolved() > opt.abs_tol) {
        throw QuadratureError("adaptive Simpson did not converge on [" + std::to_string(a) +
                                  ", " + std::to_string(b) + "]",
                              engine.unresolved());
    }
    return value;
}

}  // namespace nwhittle
