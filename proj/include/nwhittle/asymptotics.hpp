#pragma once

#include <cmath>

#include "nwhittle/error.hpp"
#include "nwhittle/quadrature.hpp"
#include "nwhittle/window.hpp"

namespace nwhittle {

/// 2 * int_{1/B}^{B} b^2(u) u^{1-alpha} (log u)^p du for p in {0, 1, 2}.
/// The range is split at u = 1 where the window changes branch.
inline double window_integral(const Window& window, double alpha, int log_power) {
    detail::require(log_power >= 0 && log_power <= 2, "log power must be 0, 1 or 2");
    const double B = window.B();
    auto f = [&](double u) {
        const double w = window.squared(u);
        if (w == 0.0) return 0.0;
        const double lu = std::log(u);
        const double lp = log_power == 0 ? 1.0 : (log_power == 1 ? lu : lu * lu);
        return w * std::exp((1.0 - alpha) * lu) * lp;
    };
    const QuadratureOptions opt{window.quad_tol()};
    return 2.0 * (integrate(f, 1.0 / B, 1.0, opt) + integrate(f, 1.0, B, opt));
}

inline double window_integral(double B, double alpha, int log_power, double quad_tol = 1e-12) {
    return window_integral(Window(B, quad_tol), alpha, log_power);
}

/// Asymptotic variance constants for a given (alpha0, B).
struct AsymptoticConstants {
    double B = 0.0;
    double alpha0 = 0.0;
    double i0 = 0.0;
    double i1 = 0.0;
    double i2 = 0.0;
    double sigma2 = 0.0;
    double tau_plus2 = 0.0;
    double tau_minus2 = 0.0;
    double tau2 = 0.0;
    double rho2 = 0.0;
    double psi = 0.0;
    double d = 0.0;
    /// B^2 D: limiting variance of L (alpha^ - alpha0), comparable to the Fourier value 8.
    double b2d = 0.0;
    double phi = 0.0;
    double m = 0.0;
};

/// Psi(B) = (B^2 - 1)^3 / (B^4 log^2 B).
inline double psi_constant(double B) {
    detail::require(B > 1.0, "B must be > 1");
    const double b2 = B * B;
    const double lb = std::log(B);
    return std::pow(b2 - 1.0, 3) / (b2 * b2 * lb * lb);
}

/// Phi(B) = log^2 B * B^2 / (B^2 - 1)^2 * (4 / (B^2 - 1) + 2 (log B - 1) / log B).
inline double phi_constant(double B) {
    detail::require(B > 1.0, "B must be > 1");
    const double b2 = B * B;
    const double lb = std::log(B);
    return lb * lb * b2 / ((b2 - 1.0) * (b2 - 1.0)) * (4.0 / (b2 - 1.0) + 2.0 * (lb - 1.0) / lb);
}

/// Bias constant m = (B + 1) kappa / B.
inline double bias_m(double kappa, double B) {
    detail::require(B > 1.0, "B must be > 1");
    return (B + 1.0) * kappa / B;
}

inline AsymptoticConstants variance_constants(const Window& window, double alpha0, double kappa = 0.0) {
    detail::require(alpha0 > 0.0, "alpha0 must be positive");
    const double B = window.B();
    const QuadratureOptions opt{window.quad_tol()};
    AsymptoticConstants c;
    c.B = B;
    c.alpha0 = alpha0;
    c.i0 = window_integral(window, alpha0, 0);
    c.i1 = window_integral(window, alpha0, 1);
    c.i2 = window_integral(window, alpha0, 2);

    const double e = 1.0 - 2.0 * alpha0;
    auto b4 = [&](double x) {
        const double w = window.squared(x);
        return w * w * std::pow(x, e);
    };
    c.sigma2 = 4.0 * (integrate(b4, 1.0 / B, 1.0, opt) + integrate(b4, 1.0, B, opt));

    auto overlap = [&](double x) { return window.squared(x) * window.squared(x / B) * std::pow(x, e); };
    c.tau_plus2 = 4.0 * integrate(overlap, 1.0, B, opt);
    c.tau_minus2 = c.tau_plus2 / std::pow(B, 2.0 - 2.0 * alpha0);
    c.tau2 = c.tau_plus2 + c.tau_minus2;

    c.rho2 = (c.sigma2 + std::pow(B, -alpha0) * c.tau2) / (c.i0 * c.i0);
    c.psi = psi_constant(B);
    c.d = c.rho2 * c.psi;
    c.b2d = B * B * c.d;
    c.phi = phi_constant(B);
    c.m = bias_m(kappa, B);
    return c;
}

inline AsymptoticConstants variance_constants(double B, double alpha0, double quad_tol = 1e-12,
                                              double kappa = 0.0) {
    return variance_constants(Window(B, quad_tol), alpha0, kappa);
}

/// sum B^{sj}, sum B^{sj} j log B and sum B^{sj} j^2 log^2 B over j = J1..J_L.
struct GeometricSums {
    long double sum0 = 0.0L;
    long double sum1 = 0.0L;
    long double sum2 = 0.0L;
};

/// Closed forms of the three geometric sums.
inline GeometricSums geometric_sums(int J1, int JL, double s, double B) {
    detail::require(J1 <= JL, "geometric sums need J1 <= J_L");
    detail::require(s > 0.0, "geometric sums need s > 0");
    detail::require(B > 1.0, "geometric sums need B > 1");
    const long double q = std::pow(static_cast<long double>(B), static_cast<long double>(s));
    const long double lb = std::log(static_cast<long double>(B));
    const long double c = 1.0L / (q - 1.0L);
    const long double front = q / (q - 1.0L);
    const long double hi = std::pow(q, static_cast<long double>(JL));
    const long double lo = std::pow(q, static_cast<long double>(J1 - 1));
    const long double jh = static_cast<long double>(JL) - c;
    const long double jl = static_cast<long double>(J1 - 1) - c;
    const long double extra = q / ((q - 1.0L) * (q - 1.0L));

    GeometricSums g;
    g.sum0 = front * (hi - lo);
    g.sum1 = front * lb * (hi * jh - lo * jl);
    g.sum2 = front * lb * lb * (hi * (jh * jh + extra) - lo * (jl * jl + extra));
    return g;
}

/// Z(s) = (sum B^{sj})(sum B^{sj} j^2 log^2 B) - (sum B^{sj} j log B)^2 in closed form.
inline long double z_statistic(int J1, int JL, double s, double B) {
    detail::require(J1 <= JL, "Z needs J1 <= J_L");
    detail::require(s > 0.0 && B > 1.0, "Z needs s > 0 and B > 1");
    const long double q = std::pow(static_cast<long double>(B), static_cast<long double>(s));
    const long double lb = std::log(static_cast<long double>(B));
    const long double lead = q * lb / (q - 1.0L);
    const long double diff = std::pow(q, static_cast<long double>(JL)) - std::pow(q, static_cast<long double>(J1 - 1));
    const long double span = static_cast<long double>(JL - (J1 - 1));
    const long double z = lead * lead *
                          (q / ((q - 1.0L) * (q - 1.0L)) * diff * diff -
                           std::pow(q, static_cast<long double>(JL + J1 - 1)) * span * span);
    // exact zero for a single scale; rounding could otherwise leave a tiny negative
    return J1 == JL ? 0.0L : z;
}

/// Limit of B^{-2 s J_L} Z(s) for J1 = 1: log^2 B * B^{3s} / (B^s - 1)^4.
inline double z_statistic_limit(double s, double B) {
    const double q = std::pow(B, s);
    const double lb = std::log(B);
    return lb * lb * q * q * q / std::pow(q - 1.0, 4);
}

/// I(B, alpha0, alpha) = I0(B, alpha0) / I0(B, alpha).
inline double k_ratio_limit(const Window& window, double alpha0, double alpha) {
    if (alpha0 == alpha) return 1.0;
    return window_integral(window, alpha0, 0) / window_integral(window, alpha, 0);
}

inline double k_ratio_limit(double B, double alpha0, double alpha, double quad_tol = 1e-12) {
    return k_ratio_limit(Window(B, quad_tol), alpha0, alpha);
}

}  // namespace nwhittle
