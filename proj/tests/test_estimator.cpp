#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nwhittle/asymptotics.hpp"
#include "nwhittle/bandsim.hpp"
#include "nwhittle/estimator.hpp"

using namespace nwhittle;
using Catch::Approx;

namespace {

struct Setup {
    BandDecomposition bands;
    KCache cache;
    explicit Setup(double B, std::int64_t L) : bands(BandDecomposition::up_to_multipole(Window(B), L)), cache(bands) {}
};

EmpiricalSpectrum scaled(EmpiricalSpectrum s, double c) {
    for (auto& v : s.values) v *= c;
    return s;
}

}  // namespace

TEST_CASE("G hat on noise-free input equals G0", "[estimator]") {
    const Setup s(2.0, 1024);
    const auto model = SpectrumModel::pure(3.0, 2.5);
    const auto t = band_powers(expected_spectrum(model, 1024), s.bands);
    CHECK(g_hat(3.0, t, s.cache) == Approx(2.5).epsilon(1e-12));
}

TEST_CASE("G hat on a single scaled band", "[estimator]") {
    const Setup s(2.0, 1024);
    const KCache one(s.bands, 6, 6);
    const double alpha = 3.3;
    const auto kv = k_values(6, alpha, s.bands);
    BandPowers t;
    t.scales = {6};
    t.values = {kv.n_j * kv.k0 * 7.0};
    CHECK(g_hat(alpha, t, one) == Approx(7.0).epsilon(1e-12));
}

TEST_CASE("all-zero band powers are rejected", "[estimator]") {
    const Setup s(2.0, 256);
    BandPowers t;
    for (const auto& b : s.bands.bands()) {
        t.scales.push_back(b.j);
        t.values.push_back(0.0);
    }
    CHECK_THROWS_AS(profile_objective(3.0, t, s.cache), EstimationError);
    CHECK_THROWS_AS(g_hat(3.0, t, s.cache), EstimationError);
}

TEST_CASE("noise-free objective has its grid minimum at alpha0", "[estimator]") {
    const Setup s(2.0, 1024);
    for (double a0 : {2.5, 3.0, 4.0}) {
        const auto t = band_powers(expected_spectrum(SpectrumModel::pure(a0, 1.0), 1024), s.bands);
        double best = 0.0, best_f = INFINITY;
        for (int i = 0; i <= 3990; ++i) {
            const double a = 2.01 + 1e-3 * i;
            const double f = profile_objective(a, t, s.cache);
            if (f < best_f) {
                best_f = f;
                best = a;
            }
        }
        CHECK(std::fabs(best - a0) <= 1e-3 + 1e-12);
        CHECK(best > 2.01);
        CHECK(best < 6.0);
    }
}

TEST_CASE("noise-free full-band recovery", "[estimator]") {
    const Setup s(2.0, 1024);
    const auto t = band_powers(expected_spectrum(SpectrumModel::pure(3.0, 2.0), 1024), s.bands);
    const auto r = minimize_profile(t, s.bands, EstimatorConfig{});
    CHECK(r.alpha_hat == Approx(3.0).margin(1e-4));
    CHECK(r.g_hat == Approx(2.0).margin(1e-4));
    CHECK_FALSE(r.boundary_flag);
    CHECK_FALSE(r.flat_objective);
    CHECK(r.range_used == std::make_pair<std::int64_t, std::int64_t>(0, 9));
    CHECK(std::fabs(r.score_at_min) < 10.0 * 1e-6 * std::fabs(r.curvature));
}

TEST_CASE("noise-free recovery on random pure models", "[estimator]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ua(2.2, 5.5), ug(0.1, 20.0);
    const Setup s(std::sqrt(2.0), 2048);
    for (int i = 0; i < 10; ++i) {
        const double a0 = ua(rng), g0 = ug(rng);
        const auto t = band_powers(expected_spectrum(SpectrumModel::pure(a0, g0), 2048), s.bands);
        const auto r = minimize_profile(t, s.cache, EstimatorConfig{});
        CHECK(r.alpha_hat == Approx(a0).margin(1e-4));
        CHECK(r.g_hat == Approx(g0).epsilon(1e-4));
    }
}

TEST_CASE("score and curvature match finite differences", "[estimator]") {
    const Setup s(2.0, 1024);
    const auto spec = sample_empirical_spectrum(SpectrumModel::kappa(3.0, 1.0, 1.0), 1024, 77);
    const auto t = band_powers(spec, s.bands);
    const double h = 1e-5;
    for (int i = 0; i < 50; ++i) {
        const double a = 2.05 + i * (5.9 - 2.05) / 49.0;
        const auto [S, Q] = score_and_curvature(a, t, s.cache);
        const double fd = (profile_objective(a + h, t, s.cache) - profile_objective(a - h, t, s.cache)) / (2 * h);
        const double fd2 = (score_and_curvature(a + h, t, s.cache).first -
                            score_and_curvature(a - h, t, s.cache).first) / (2 * h);
        CHECK(std::fabs(S - fd) <= 1e-6 * std::max(1.0, std::fabs(S)));
        CHECK(std::fabs(Q - fd2) <= 1e-6 * std::max(1.0, std::fabs(Q)));
    }
}

TEST_CASE("curvature near alpha0 approaches its limit", "[estimator]") {
    const double B = 2.0;
    const double limit = B * B * std::log(B) * std::log(B) / ((B * B - 1) * (B * B - 1));
    const Setup s(B, 1024);
    const auto model = SpectrumModel::pure(3.0, 1.0);
    const auto t0 = band_powers(expected_spectrum(model, 1024), s.bands);
    CHECK(score_and_curvature(3.0, t0, s.cache).second == Approx(limit).epsilon(0.05));
    const auto t = band_powers(sample_empirical_spectrum(model, 1024, 5), s.bands);
    const auto r = minimize_profile(t, s.cache, EstimatorConfig{});
    CHECK(r.curvature == Approx(limit).epsilon(0.05));
}

TEST_CASE("c_B invariance and scale equivariance", "[estimator]") {
    const Setup s(2.0, 1024);
    const KCache scaled_cache(s.bands, 3.7);
    const EstimatorConfig cfg;
    for (int i = 0; i < 20; ++i) {
        const auto spec = sample_empirical_spectrum(SpectrumModel::pure(2.5 + 0.1 * i, 1.0), 1024, 1000 + i);
        const auto t = band_powers(spec, s.bands);
        const auto r = minimize_profile(t, s.cache, cfg);
        const auto rc = minimize_profile(t, scaled_cache, cfg);
        CHECK(rc.alpha_hat == Approx(r.alpha_hat).margin(cfg.opt_tol));
        CHECK(rc.g_hat == Approx(r.g_hat).epsilon(1e-5));
        CHECK(g_hat(3.0, t, scaled_cache) == Approx(g_hat(3.0, t, s.cache)).epsilon(1e-13));
        CHECK(profile_objective(3.0, t, scaled_cache) - profile_objective(3.0, t, s.cache) ==
              Approx(profile_objective(4.0, t, scaled_cache) - profile_objective(4.0, t, s.cache)).margin(1e-12));

        const auto t5 = band_powers(scaled(spec, 5.0), s.bands);
        const auto r5 = minimize_profile(t5, s.cache, cfg);
        CHECK(r5.alpha_hat == Approx(r.alpha_hat).margin(cfg.opt_tol));
        CHECK(r5.g_hat == Approx(5.0 * r.g_hat).epsilon(1e-5));
        CHECK(profile_objective(3.0, t5, s.cache) - profile_objective(3.0, t, s.cache) ==
              Approx(std::log(5.0)).margin(1e-12));
    }
}

TEST_CASE("single band gives a flat objective, not a crash", "[estimator]") {
    const Setup s(2.0, 1024);
    const KCache one(s.bands, 7, 7);
    const auto t = band_powers(sample_empirical_spectrum(SpectrumModel::pure(3.0, 1.0), 1024, 1), s.bands);
    EstimateResult r;
    REQUIRE_NOTHROW(r = minimize_profile(t, one, EstimatorConfig{}));
    CHECK(r.flat_objective);
    CHECK(r.alpha_hat >= 2.01);
    CHECK(r.alpha_hat <= 10.0);
}

TEST_CASE("boundary flag when the optimum lies outside the range", "[estimator]") {
    const Setup s(2.0, 1024);
    const auto t = band_powers(expected_spectrum(SpectrumModel::pure(5.0, 1.0), 1024), s.bands);
    EstimatorConfig cfg;
    cfg.alpha_range = {2.5, 4.0};
    const auto r = minimize_profile(t, s.cache, cfg);
    CHECK(r.boundary_flag);
    CHECK(r.alpha_hat == Approx(4.0).margin(cfg.opt_tol));
}

TEST_CASE("estimator config validation", "[estimator]") {
    EstimatorConfig c;
    CHECK_NOTHROW(c.validate());
    c.alpha_range = {3.0, 2.5};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.opt_tol = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.g_range = {0.0, 1.0};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("narrow band scale selection", "[estimator]") {
    CHECK(narrow_band_range(9, 2.0, 1.0 - 1.0 / 2.0) == 8);
    CHECK(narrow_band_range(12, 1.5, 1.0 - 1.0 / 1.5) == 11);
    CHECK(narrow_band_range(9, 2.0, 0.75) == 7);
    // log(1 - 1/729)/log 2 = -0.00198 -> floor -1
    CHECK(narrow_band_range(9, 2.0, inverse_cube_schedule(9)) == 8);
    CHECK(inverse_cube_schedule(9) == Approx(1.0 / 729.0));
    CHECK(narrow_band_range(79, std::pow(2.0, 0.125), [](int J) { return 1.0 / (double(J) * J * J); }) == 78);
    CHECK_THROWS_AS(narrow_band_range(9, 2.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(narrow_band_range(9, 2.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(narrow_band_range(2, 2.0, 0.999), InvalidArgument);
}

TEST_CASE("narrow-band noise-free recovery", "[estimator]") {
    const Setup s(2.0, 1024);
    const auto t = band_powers(expected_spectrum(SpectrumModel::pure(3.0, 2.0), 1024), s.bands);
    const auto r = estimate_narrow_band(t, s.bands, 7, EstimatorConfig{});
    CHECK(r.alpha_hat == Approx(3.0).margin(1e-4));
    CHECK(r.g_hat == Approx(2.0).margin(1e-4));
    CHECK(r.range_used == std::make_pair<std::int64_t, std::int64_t>(7, 9));
    CHECK_THROWS_AS(estimate_narrow_band(t, s.bands, 9, EstimatorConfig{}), InvalidArgument);
}

TEST_CASE("Fourier baseline", "[estimator]") {
    const auto model = SpectrumModel::pure(3.0, 2.0);
    const auto ex = expected_spectrum(model, 1024);
    const auto r = fourier_whittle_estimate(ex, EstimatorConfig{});
    CHECK(r.alpha_hat == Approx(3.0).margin(1e-4));
    CHECK(r.g_hat == Approx(2.0).margin(1e-4));

    EstimatorConfig narrow;
    narrow.baseline_l_range = std::make_pair<std::int64_t, std::int64_t>(724, 1024);
    const auto rn = fourier_whittle_estimate(ex, narrow);
    CHECK(rn.alpha_hat == Approx(3.0).margin(1e-4));
    CHECK(rn.range_used.first == 724);

    // objective: log(sum (2l+1) C^_l l^a / sum (2l+1)) - a * mean log
    const auto spec = sample_empirical_spectrum(model, 300, 8);
    const double a = 3.4;
    double num = 0, den = 0, wl = 0;
    for (std::int64_t l = 10; l <= 300; ++l) {
        num += (2.0 * l + 1) * spec.at(l) * std::pow(double(l), a);
        den += 2.0 * l + 1;
        wl += (2.0 * l + 1) * std::log(double(l));
    }
    CHECK(fourier_objective(a, spec, 10, 300) == Approx(std::log(num / den) - a * wl / den).epsilon(1e-12));

    const double h = 1e-5;
    for (double x : {2.2, 3.0, 4.5}) {
        const auto [S, Q] = fourier_score_and_curvature(x, spec, 10, 300);
        const double fd = (fourier_objective(x + h, spec, 10, 300) - fourier_objective(x - h, spec, 10, 300)) / (2 * h);
        CHECK(std::fabs(S - fd) <= 1e-6 * std::max(1.0, std::fabs(S)));
        CHECK(Q > 0.0);
    }
    narrow.baseline_l_range = std::make_pair<std::int64_t, std::int64_t>(724, 2048);
    CHECK_THROWS_AS(fourier_whittle_estimate(ex, narrow), RangeError);
}

TEST_CASE("variance of G hat at alpha0", "[estimator][slow]") {
    // Exact variance from independent chi-square multipoles, against Monte Carlo and the asymptotic constant.
    const double B = 2.0, a0 = 3.0, G0 = 1.5;
    const std::int64_t L = 1024;
    const Setup s(B, L);
    const auto model = SpectrumModel::pure(a0, G0);
    const int J_L = s.bands.j_max();
    REQUIRE(J_L == 9);

    double n_total = 0.0;
    std::vector<double> coef(L + 1, 0.0);
    for (const auto& band : s.bands.bands()) {
        const auto kv = k_values(band, B, a0);
        n_total += kv.n_j;
        for (std::size_t i = 0; i < band.size(); ++i) {
            const auto l = band.multipoles[i];
            coef[static_cast<std::size_t>(l)] += band.weights[i] * (2.0 * l + 1.0) / kv.k0;
        }
    }
    double exact = 0.0;
    for (std::int64_t l = 1; l <= L; ++l) {
        const double c = coef[static_cast<std::size_t>(l)] * model.cl(l);
        exact += c * c * 2.0 / (2.0 * l + 1.0);
    }
    exact /= n_total * n_total;

    const int R = 5000;
    double sum = 0, sum2 = 0;
    for (int r = 0; r < R; ++r) {
        const auto t = band_powers(sample_empirical_spectrum(model, L, 2024, static_cast<std::uint64_t>(r)), s.bands);
        const double g = g_hat(a0, t, s.cache);
        sum += g;
        sum2 += g * g;
    }
    const double mean = sum / R;
    const double var = (sum2 - R * mean * mean) / (R - 1);
    CHECK(mean == Approx(G0).epsilon(0.01));
    CHECK(var == Approx(exact).epsilon(0.07));

    const auto c = variance_constants(B, a0);
    const double scaled = std::pow(B, 2.0 * J_L) * var;
    CHECK(scaled == Approx(G0 * G0 * c.rho2 * (B * B - 1) / (B * B)).epsilon(0.15));
}
