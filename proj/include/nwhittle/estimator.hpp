#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nwhittle/bandsim.hpp"
#include "nwhittle/error.hpp"
#include "nwhittle/minimize.hpp"
#include "nwhittle/spectrum.hpp"
#include "nwhittle/window.hpp"

namespace nwhittle {

struct GRange {
    double lo = 1e-12;
    double hi = 1e12;

    bool contains(double g) const noexcept { return g >= lo && g <= hi; }
};

struct EstimatorConfig {
    ParameterRange alpha_range{2.01, 10.0};
    GRange g_range{};
    double opt_tol = 1e-6;
    int prescan_points = 64;
    /// Needlet scales (j_lo, j_hi); unset means every band of the decomposition.
    std::optional<std::pair<int, int>> band_range;
    /// Multipoles (l_lo, l_hi) for the Fourier baseline; unset means the whole spectrum.
    std::optional<std::pair<std::int64_t, std::int64_t>> baseline_l_range;

    void validate() const {
        // The lower end is allowed below 2 so that alpha0 = 2 cells can be reproduced.
        detail::require(alpha_range.lo > 0.0 && alpha_range.lo < alpha_range.hi && std::isfinite(alpha_range.hi),
                        "alpha range must satisfy 0 < a1 < a2 < inf");
        detail::require(g_range.lo > 0.0 && g_range.lo < g_range.hi && std::isfinite(g_range.hi),
                        "G range must satisfy 0 < g1 < g2 < inf");
        detail::require(opt_tol > 0.0, "opt_tol must be positive");
        detail::require(prescan_points >= 3, "prescan needs at least 3 points");
        if (band_range) detail::require(band_range->first <= band_range->second, "empty band range");
        if (baseline_l_range)
            detail::require(baseline_l_range->first >= 1 && baseline_l_range->first < baseline_l_range->second,
                            "baseline multipole range must satisfy 1 <= l_lo < l_hi");
    }
};

struct EstimateResult {
    double alpha_hat = 0.0;
    double g_hat = 0.0;
    double objective_at_min = 0.0;
    double score_at_min = 0.0;
    double curvature = 0.0;
    /// Scales (needlet) or multipoles (Fourier) used, inclusive.
    std::pair<std::int64_t, std::int64_t> range_used{0, 0};
    bool boundary_flag = false;
    bool flat_objective = false;
    bool g_in_range = true;
};

/// Per-band data needed to evaluate K_j and its derivatives at any alpha.
/// N_j = c_B B^{2j}; the estimator does not depend on c_B.
class KCache {
public:
    struct Entry {
        int j = 0;
        double n_j = 0.0;
        std::vector<double> weight;  // b^2(l/B^j) (2l+1)
        std::vector<double> log_l;
    };

    explicit KCache(const BandDecomposition& bands, double c_B = 1.0)
        : KCache(bands, bands.j_min(), bands.j_max(), c_B) {}

    KCache(const BandDecomposition& bands, int j_lo, int j_hi, double c_B = 1.0) : c_B_(c_B) {
        detail::require(c_B > 0.0, "c_B must be positive");
        detail::require(j_lo <= j_hi, "empty scale range");
        for (const auto& band : bands.bands()) {
            if (band.j < j_lo || band.j > j_hi) continue;
            Entry e;
            e.j = band.j;
            e.n_j = c_B * std::pow(bands.B(), 2.0 * band.j);
            e.weight.reserve(band.size());
            e.log_l.reserve(band.size());
            for (std::size_t i = 0; i < band.size(); ++i) {
                const double l = static_cast<double>(band.multipoles[i]);
                e.weight.push_back(band.weights[i] * (2.0 * l + 1.0));
                e.log_l.push_back(std::log(l));
            }
            entries_.push_back(std::move(e));
        }
        if (entries_.empty())
            throw RangeError("no non-empty band in scales " + std::to_string(j_lo) + ".." + std::to_string(j_hi));
        for (const auto& e : entries_) n_total_ += e.n_j;
    }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    int j_lo() const noexcept { return entries_.front().j; }
    int j_hi() const noexcept { return entries_.back().j; }
    double n_total() const noexcept { return n_total_; }
    double c_B() const noexcept { return c_B_; }

    KValues at(std::size_t i, double alpha, bool derivatives = true) const {
        const Entry& e = entries_[i];
        KValues kv;
        kv.n_j = e.n_j;
        for (std::size_t k = 0; k < e.weight.size(); ++k) {
            const double t = e.weight[k] * std::exp(-alpha * e.log_l[k]);
            kv.k0 += t;
            if (derivatives) {
                kv.k1 -= t * e.log_l[k];
                kv.k2 += t * e.log_l[k] * e.log_l[k];
            }
        }
        kv.k0 /= e.n_j;
        kv.k1 /= e.n_j;
        kv.k2 /= e.n_j;
        return kv;
    }

private:
    std::vector<Entry> entries_;
    double n_total_ = 0.0;
    double c_B_ = 1.0;
};

namespace detail {

inline std::vector<double> align_powers(const BandPowers& powers, const KCache& cache) {
    std::vector<double> t;
    t.reserve(cache.size());
    bool any_positive = false;
    for (const auto& e : cache.entries()) {
        const double v = powers.at(e.j);
        if (v < 0.0 || !std::isfinite(v)) throw EstimationError("band powers must be finite and non-negative");
        any_positive = any_positive || v > 0.0;
        t.push_back(v);
    }
    if (!any_positive) throw EstimationError("all band powers are zero; the profile objective is undefined");
    return t;
}

struct ProfileTerms {
    double objective = 0.0;
    double score = 0.0;
    double curvature = 0.0;
    double g_hat = 0.0;
};

// R(a)  = log A(a) + sum_j N_j log K_j / sum_j N_j,   A = sum_j T_j / K_j
// R'(a) = A'/A + sum_j N_j K_j1/K_j / sum N
// R''(a)= A''/A - (A'/A)^2 + sum_j N_j (K_j2/K_j - (K_j1/K_j)^2) / sum N
inline ProfileTerms profile_terms(double alpha, const std::vector<double>& t, const KCache& cache,
                                  bool derivatives) {
    double A = 0.0, A1 = 0.0, A2 = 0.0;
    double logk = 0.0, r1 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < cache.size(); ++i) {
        const KValues kv = cache.at(i, alpha, derivatives);
        const double ratio = t[i] / kv.k0;
        A += ratio;
        logk += kv.n_j * std::log(kv.k0);
        if (derivatives) {
            const double u1 = kv.k1 / kv.k0;
            const double u2 = kv.k2 / kv.k0;
            A1 -= ratio * u1;
            A2 += ratio * (2.0 * u1 * u1 - u2);
            r1 += kv.n_j * u1;
            r2 += kv.n_j * (u2 - u1 * u1);
        }
    }
    const double n = cache.n_total();
    ProfileTerms out;
    out.objective = std::log(A) + logk / n;
    out.g_hat = A / n;
    if (derivatives) {
        const double s = A1 / A;
        out.score = s + r1 / n;
        out.curvature = A2 / A - s * s + r2 / n;
    }
    return out;
}

inline bool near_boundary(double x, const ParameterRange& r, double tol) {
    return x - r.lo <= tol || r.hi - x <= tol;
}

}  // namespace detail

/// G^(alpha) = (sum_j T_j / K_j(alpha)) / sum_j N_j.
inline double g_hat(double alpha, const BandPowers& powers, const KCache& cache) {
    const auto t = detail::align_powers(powers, cache);
    return detail::profile_terms(alpha, t, cache, false).g_hat;
}

/// Profiled objective R(alpha) = log sum_j T_j/K_j + sum_j N_j log K_j / sum_j N_j.
inline double profile_objective(double alpha, const BandPowers& powers, const KCache& cache) {
    const auto t = detail::align_powers(powers, cache);
    return detail::profile_terms(alpha, t, cache, false).objective;
}

/// Analytic first and second alpha-derivatives of the profiled objective.
inline std::pair<double, double> score_and_curvature(double alpha, const BandPowers& powers, const KCache& cache) {
    const auto t = detail::align_powers(powers, cache);
    const auto p = detail::profile_terms(alpha, t, cache, true);
    return {p.score, p.curvature};
}

/// Full-band estimate over the scales held by `cache`.
inline EstimateResult minimize_profile(const BandPowers& powers, const KCache& cache,
                                       const EstimatorConfig& config) {
    config.validate();
    const auto t = detail::align_powers(powers, cache);
    auto objective = [&](double a) { return detail::profile_terms(a, t, cache, false).objective; };
    const auto m = minimize_on_interval(objective, config.alpha_range.lo, config.alpha_range.hi,
                                        {config.opt_tol, config.prescan_points});
    const auto p = detail::profile_terms(m.x, t, cache, true);

    EstimateResult r;
    r.alpha_hat = m.x;
    r.g_hat = p.g_hat;
    r.objective_at_min = p.objective;
    r.score_at_min = p.score;
    r.curvature = p.curvature;
    r.range_used = {cache.j_lo(), cache.j_hi()};
    r.boundary_flag = detail::near_boundary(m.x, config.alpha_range, config.opt_tol);
    r.flat_objective = std::fabs(p.curvature) < 1e-10;
    r.g_in_range = config.g_range.contains(p.g_hat);
    return r;
}

/// Estimate using the configured band range (all bands by default).
inline EstimateResult minimize_profile(const BandPowers& powers, const BandDecomposition& bands,
                                       const EstimatorConfig& config) {
    if (config.band_range)
        return minimize_profile(powers, KCache(bands, config.band_range->first, config.band_range->second), config);
    return minimize_profile(powers, KCache(bands), config);
}

/// Narrow-band lower scale: J1 = J_L + floor(log(1 - g) / log B), capped at J_L - 1.
inline int narrow_band_range(int J_L, double B, double g) {
    detail::require(B > 1.0, "B must be > 1");
    detail::require(g > 0.0 && g < 1.0, "narrow-band schedule must satisfy 0 < g(J_L) < 1");
    // tolerance keeps exact cases such as g = 1 - 1/B from rounding one scale down
    const double shift = std::floor(std::log1p(-g) / std::log(B) + 1e-9);
    int J1 = J_L + static_cast<int>(shift);
    if (J1 > J_L - 1) J1 = J_L - 1;
    if (J1 >= J_L) throw InvalidArgument("narrow band schedule yields J1 >= J_L");
    if (J1 < 0) throw InvalidArgument("narrow band schedule yields J1 < 0");
    return J1;
}

inline int narrow_band_range(int J_L, double B, const std::function<double(int)>& schedule) {
    return narrow_band_range(J_L, B, schedule(J_L));
}

/// Default schedule g(J_L) = J_L^{-3}.
inline double inverse_cube_schedule(int J_L) {
    detail::require(J_L >= 2, "inverse-cube schedule needs J_L >= 2");
    return 1.0 / (static_cast<double>(J_L) * J_L * J_L);
}

/// Narrow-band estimate summing scales J1..J_L only.
inline EstimateResult estimate_narrow_band(const BandPowers& powers, const BandDecomposition& bands, int J1,
                                           const EstimatorConfig& config) {
    const int J_L = config.band_range ? config.band_range->second : bands.j_max();
    detail::require(J1 < J_L, "narrow band needs J1 < J_L");
    return minimize_profile(powers, KCache(bands, J1, J_L), config);
}

namespace detail {

struct FourierData {
    std::vector<double> w;       // (2l+1) C^_l
    std::vector<double> log_rel; // log(l) - log(l_hi)
    double mean_log = 0.0;       // sum (2l+1) log l / sum (2l+1)
    double log_ref = 0.0;
    double dof = 0.0;            // sum (2l+1)
};

inline FourierData fourier_data(const EmpiricalSpectrum& spec, std::int64_t lo, std::int64_t hi) {
    if (lo < spec.l_min || hi > spec.L)
        throw RangeError("Fourier range " + std::to_string(lo) + ".." + std::to_string(hi) +
                         " exceeds observed multipoles " + std::to_string(spec.l_min) + ".." + std::to_string(spec.L));
    detail::require(hi > lo, "Fourier estimate needs at least two multipoles");
    FourierData d;
    d.log_ref = std::log(static_cast<double>(hi));
    double swl = 0.0;
    bool any = false;
    for (std::int64_t l = lo; l <= hi; ++l) {
        const double x = static_cast<double>(l);
        const double v = spec.at(l);
        any = any || v > 0.0;
        d.w.push_back((2.0 * x + 1.0) * v);
        d.log_rel.push_back(std::log(x) - d.log_ref);
        d.dof += 2.0 * x + 1.0;
        swl += (2.0 * x + 1.0) * std::log(x);
    }
    if (!any) throw EstimationError("empirical spectrum is identically zero on the Fourier range");
    d.mean_log = swl / d.dof;
    return d;
}

// R_F(a) = log G_F(a) - a * mean_log,  G_F(a) = sum (2l+1) C^_l l^a / sum (2l+1).
// Powers are taken relative to l_hi to keep the sums in range.
inline ProfileTerms fourier_terms(double alpha, const FourierData& d, bool derivatives) {
    double A = 0.0, A1 = 0.0, A2 = 0.0;
    for (std::size_t i = 0; i < d.w.size(); ++i) {
        const double t = d.w[i] * std::exp(alpha * d.log_rel[i]);
        A += t;
        if (derivatives) {
            A1 += t * d.log_rel[i];
            A2 += t * d.log_rel[i] * d.log_rel[i];
        }
    }
    ProfileTerms out;
    out.g_hat = A / d.dof * std::exp(alpha * d.log_ref);
    out.objective = std::log(A / d.dof) + alpha * d.log_ref - alpha * d.mean_log;
    if (derivatives) {
        const double s = A1 / A;
        out.score = s + d.log_ref - d.mean_log;
        out.curvature = A2 / A - s * s;
    }
    return out;
}

}  // namespace detail

/// Multipole-by-multipole profiled Whittle estimate over l_lo..l_hi.
inline EstimateResult fourier_whittle_estimate(const EmpiricalSpectrum& spec, const EstimatorConfig& config) {
    config.validate();
    const auto range = config.baseline_l_range.value_or(std::make_pair(spec.l_min, spec.L));
    const auto d = detail::fourier_data(spec, range.first, range.second);
    auto objective = [&](double a) { return detail::fourier_terms(a, d, false).objective; };
    const auto m = minimize_on_interval(objective, config.alpha_range.lo, config.alpha_range.hi,
                                        {config.opt_tol, config.prescan_points});
    const auto p = detail::fourier_terms(m.x, d, true);

    EstimateResult r;
    r.alpha_hat = m.x;
    r.g_hat = p.g_hat;
    r.objective_at_min = p.objective;
    r.score_at_min = p.score;
    r.curvature = p.curvature;
    r.range_used = range;
    r.boundary_flag = detail::near_boundary(m.x, config.alpha_range, config.opt_tol);
    r.flat_objective = std::fabs(p.curvature) < 1e-10;
    r.g_in_range = config.g_range.contains(p.g_hat);
    return r;
}

/// Fourier profiled objective, exposed for tests and diagnostics.
inline double fourier_objective(double alpha, const EmpiricalSpectrum& spec, std::int64_t lo, std::int64_t hi) {
    return detail::fourier_terms(alpha, detail::fourier_data(spec, lo, hi), false).objective;
}

inline std::pair<double, double> fourier_score_and_curvature(double alpha, const EmpiricalSpectrum& spec,
                                                             std::int64_t lo, std::int64_t hi) {
    const auto p = detail::fourier_terms(alpha, detail::fourier_data(spec, lo, hi), true);
    return {p.score, p.curvature};
}

}  // namespace nwhittle
