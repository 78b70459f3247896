#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "nwhittle/error.hpp"

namespace nwhittle {

struct ShapiroWilk {
    double w = 0.0;
    double p = 0.0;
};

namespace detail {

template <std::size_t N>
double poly(const double (&c)[N], double x) {
    double r = c[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) r = r * x + c[i];
    return r;
}

}  // namespace detail

/// Shapiro–Wilk W with Royston's (1995) coefficient and p-value approximations.
inline ShapiroWilk shapiro_wilk(std::vector<double> x) {
    const std::size_t n = x.size();
    if (n < 3 || n > 5000) throw InvalidArgument("Shapiro-Wilk needs 3 <= n <= 5000");
    for (double v : x)
        if (!std::isfinite(v)) throw InvalidArgument("Shapiro-Wilk sample contains non-finite values");
    std::sort(x.begin(), x.end());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    if (!(ss > 0.0) || x.front() == x.back()) throw InvalidArgument("Shapiro-Wilk sample has zero variance");

    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
    static constexpr double g[] = {-2.273, 0.459};

    const boost::math::normal_distribution<double> nd;
    const double an = static_cast<double>(n);
    const std::size_t half = n / 2;

    // a[i] for the lower half, stored as positive magnitudes; a_{n+1-i} = a_i, a_i sign negative
    std::vector<double> a(half);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        std::vector<double> m(half);
        double summ2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            m[i] = boost::math::quantile(nd, (static_cast<double>(i + 1) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = detail::poly(c1, rsn) - m[0] / ssumm2;

        std::size_t i1;
        double fac;
        if (n > 5) {
            i1 = 2;
            const double a2 = -m[1] / ssumm2 + detail::poly(c2, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                            (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
        } else {
            i1 = 1;
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (std::size_t i = i1; i < half; ++i) a[i] = -m[i] / fac;
    }

    double num = 0.0;
    for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
    ShapiroWilk out;
    out.w = std::min(1.0, num * num / ss);

    if (n == 3) {
        constexpr double pi6 = 1.90985931710274;   // 6/pi
        constexpr double stqr = 1.04719755119660;  // pi/3
        out.w = std::max(out.w, 0.75);
        out.p = std::max(0.0, pi6 * (std::asin(std::sqrt(out.w)) - stqr));
        return out;
    }
    if (out.w >= 1.0) {
        out.p = 1.0;
        return out;
    }
    double w1 = std::log(1.0 - out.w);
    double mu, sd;
    if (n <= 11) {
        const double gamma = detail::poly(g, an);
        if (w1 >= gamma) {
            out.p = 1e-99;
            return out;
        }
        w1 = -std::log(gamma - w1);
        mu = detail::poly(c3, an);
        sd = std::exp(detail::poly(c4, an));
    } else {
        const double xx = std::log(an);
        mu = detail::poly(c5, xx);
        sd = std::exp(detail::poly(c6, xx));
    }
    out.p = boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(mu, sd), w1));
    return out;
}

}  // namespace nwhittle
