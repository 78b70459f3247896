#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nwhittle/error.hpp"
#include "nwhittle/quadrature.hpp"

namespace nwhittle {

/// Smooth bump exp(-1/(1-u^2)) on (-1, 1), zero elsewhere.
inline double bump(double u) {
    const double s = 1.0 - u * u;
    return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

struct WindowParams {
    double B = 2.0;
    double quad_tol = 1e-12;

    void validate() const {
        detail::require(B > 1.0 && std::isfinite(B), "window bandwidth B must be > 1, got " + std::to_string(B));
        detail::require(quad_tol > 0.0, "quad_tol must be positive");
    }
};

/// The squared needlet window b^2(x; B), supported on (1/B, B), built from the
/// normalised primitive of the bump function.
class Window {
public:
    explicit Window(WindowParams params) : params_(params) {
        params_.validate();
        norm_ = integrate(bump, -1.0, 1.0, {params_.quad_tol * 1e-2});
        scale_ = 2.0 * params_.B / (params_.B - 1.0);
    }

    explicit Window(double B, double quad_tol = 1e-12) : Window(WindowParams{B, quad_tol}) {}

    double B() const noexcept { return params_.B; }
    double quad_tol() const noexcept { return params_.quad_tol; }
    const WindowParams& params() const noexcept { return params_; }

    /// Normalising constant of the bump integral over [-1, 1].
    double normalizer() const noexcept { return norm_; }

    /// Normalised primitive of the bump, from -1 to t.
    double cumulative(double t) const {
        if (t <= -1.0) return 0.0;
        if (t >= 1.0) return 1.0;
        // integrate over the shorter tail; the bump is even
        if (t > 0.0) return 1.0 - integrate(bump, -1.0, -t, {params_.quad_tol}) / norm_;
        return integrate(bump, -1.0, t, {params_.quad_tol}) / norm_;
    }

    double squared(double x) const {
        if (std::isnan(x)) throw InvalidArgument("window argument is NaN");
        const double B = params_.B;
        if (x <= 1.0 / B || x >= B) return 0.0;
        if (x <= 1.0) return 1.0 - cumulative(1.0 - scale_ * (x - 1.0 / B));
        return cumulative(1.0 - scale_ * (x / B - 1.0 / B));
    }

    double operator()(double x) const { return squared(x); }

private:
    WindowParams params_;
    double norm_ = 0.0;
    double scale_ = 0.0;
};

/// b^2(x; B) for a one-off evaluation.
inline double window_squared(double x, double B, double quad_tol = 1e-12) {
    return Window(B, quad_tol).squared(x);
}

/// Multipoles of needlet scale j and their window weights b^2(l / B^j).
struct Band {
    int j = 0;
    std::vector<std::int64_t> multipoles;
    std::vector<double> weights;

    bool empty() const noexcept { return multipoles.empty(); }
    std::size_t size() const noexcept { return multipoles.size(); }
    std::int64_t front() const { return multipoles.front(); }
    std::int64_t back() const { return multipoles.back(); }
};

/// All integers l with B^{j-1} < l < B^{j+1} and l >= l_min whose weight is non-zero.
inline Band band_multipoles(int j, const Window& window, std::int64_t l_min = 1) {
    detail::require(j >= 0, "scale index j must be non-negative");
    detail::require(l_min >= 1, "l_min must be at least 1");
    const double B = window.B();
    const double lower = std::pow(B, j - 1);
    const double upper = std::pow(B, j + 1);
    const double centre = std::pow(B, j);

    Band band;
    band.j = j;
    auto l = static_cast<std::int64_t>(std::floor(lower));
    if (l < l_min) l = l_min;
    for (; static_cast<double>(l) < upper; ++l) {
        if (!(static_cast<double>(l) > lower)) continue;
        const double w = window.squared(static_cast<double>(l) / centre);
        if (w <= 0.0) continue;
        band.multipoles.push_back(l);
        band.weights.push_back(w);
    }
    return band;
}

inline Band band_multipoles(int j, double B, std::int64_t l_min = 1, double quad_tol = 1e-12) {
    return band_multipoles(j, Window(B, quad_tol), l_min);
}

/// |sum_j b^2(l / B^j) - 1|; the partition of unity holds for l > B.
inline double partition_residual(std::int64_t l, const Window& window, int j_max) {
    const double B = window.B();
    detail::require(static_cast<double>(l) > B, "partition of unity requires l > B");
    detail::require(std::pow(B, j_max - 1) > static_cast<double>(l),
                    "j_max too small: need B^(j_max-1) > l");
    double sum = 0.0;
    for (int j = 0; j <= j_max; ++j) sum += window.squared(static_cast<double>(l) / std::pow(B, j));
    return std::fabs(sum - 1.0);
}

inline double partition_residual(std::int64_t l, double B, int j_max, double quad_tol = 1e-12) {
    return partition_residual(l, Window(B, quad_tol), j_max);
}

/// Highest scale whose band lies entirely below L: floor(log_B L) - 1.
inline int max_scale_for(std::int64_t L, double B) {
    detail::require(B > 1.0, "B must be > 1");
    detail::require(L >= 2, "L must be at least 2");
    // nudge so that exact powers (L = B^k) are not lost to rounding
    const double k = std::floor(std::log(static_cast<double>(L)) / std::log(B) + 1e-9);
    return static_cast<int>(k) - 1;
}

/// Needlet bands j_lo..j_hi with memoised weights. Empty bands are dropped.
class BandDecomposition {
public:
    BandDecomposition(const Window& window, int j_hi, std::int64_t l_min = 1, int j_lo = 0)
        : window_(window), l_min_(l_min), j_hi_(j_hi) {
        detail::require(j_lo >= 0 && j_lo <= j_hi, "invalid scale range");
        for (int j = j_lo; j <= j_hi; ++j) {
            Band b = band_multipoles(j, window_, l_min_);
            if (!b.empty()) bands_.push_back(std::move(b));
        }
        if (bands_.empty()) throw RangeError("every band in the requested scale range is empty");
    }

    /// Bands up to J_L = floor(log_B L) - 1, so that every multipole used is <= L.
    static BandDecomposition up_to_multipole(const Window& window, std::int64_t L, std::int64_t l_min = 1) {
        return BandDecomposition(window, max_scale_for(L, window.B()), l_min);
    }

    const Window& window() const noexcept { return window_; }
    double B() const noexcept { return window_.B(); }
    std::int64_t l_min() const noexcept { return l_min_; }
    const std::vector<Band>& bands() const noexcept { return bands_; }

    /// Smallest scale with a non-empty band.
    int j_min() const noexcept { return bands_.front().j; }
    int j_max() const noexcept { return bands_.back().j; }
    std::int64_t max_multipole() const noexcept { return bands_.back().back(); }

    bool has(int j) const noexcept { return find(j) != nullptr; }

    const Band& band(int j) const {
        const Band* b = find(j);
        if (b == nullptr) throw RangeError("no non-empty band at scale j = " + std::to_string(j));
        return *b;
    }

private:
    const Band* find(int j) const noexcept {
        for (const auto& b : bands_)
            if (b.j == j) return &b;
        return nullptr;
    }

    Window window_;
    std::int64_t l_min_;
    int j_hi_;
    std::vector<Band> bands_;
};

/// K_j(alpha) and its first two alpha-derivatives, with N_j = B^{2j} (c_B = 1).
struct KValues {
    double k0 = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double n_j = 0.0;
};

inline KValues k_values(const Band& band, double B, double alpha) {
    if (band.empty()) throw RangeError("K_j requested for an empty band at j = " + std::to_string(band.j));
    KValues kv;
    kv.n_j = std::pow(B, 2.0 * band.j);
    for (std::size_t i = 0; i < band.size(); ++i) {
        const double l = static_cast<double>(band.multipoles[i]);
        const double logl = std::log(l);
        const double t = band.weights[i] * (2.0 * l + 1.0) * std::exp(-alpha * logl);
        kv.k0 += t;
        kv.k1 -= t * logl;
        kv.k2 += t * logl * logl;
    }
    kv.k0 /= kv.n_j;
    kv.k1 /= kv.n_j;
    kv.k2 /= kv.n_j;
    return kv;
}

inline KValues k_values(int j, double alpha, const BandDecomposition& bands) {
    return k_values(bands.band(j), bands.B(), alpha);
}

}  // namespace nwhittle
