#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "nwhittle/asymptotics.hpp"
#include "nwhittle/bandsim.hpp"
#include "nwhittle/random.hpp"
#include "oracles.hpp"

using namespace nwhittle;
using Catch::Approx;

TEST_CASE("gamma and chi-square moments", "[bandsim]") {
    for (double shape : {0.3, 1.0, 2.5, 10.5, 200.0}) {
        Xoshiro256 rng(derive_seed(99, static_cast<std::uint64_t>(shape * 10)));
        const int n = 40000;
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = sample_gamma(rng, shape);
            REQUIRE(x >= 0.0);
            s += x;
            s2 += x * x;
        }
        const double mean = s / n;
        const double var = s2 / n - mean * mean;
        CHECK(std::fabs(mean - shape) < 4.0 * std::sqrt(shape / n));
        CHECK(var == Approx(shape).epsilon(0.05));
    }
    Xoshiro256 rng(1);
    CHECK_THROWS_AS(sample_gamma(rng, 0.0), InvalidArgument);
}

TEST_CASE("uniform draws lie in [0, 1)", "[bandsim]") {
    Xoshiro256 rng(7);
    double lo = 1, hi = 0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(lo < 1e-3);
    CHECK(hi > 1 - 1e-3);
}

TEST_CASE("empirical spectrum moments at l = 10", "[bandsim]") {
    const auto model = SpectrumModel::pure(3.0, 1.0);
    const int R = 20000;
    double s = 0, s2 = 0;
    for (int r = 0; r < R; ++r) {
        const auto spec = sample_empirical_spectrum(model, 10, 123, static_cast<std::uint64_t>(r), 10);
        const double x = spec.at(10) / model.cl(10);
        s += x;
        s2 += x * x;
    }
    const double mean = s / R;
    const double var = (s2 - R * mean * mean) / (R - 1);
    CHECK(std::fabs(mean - 1.0) < 3.0 * std::sqrt(2.0 / 21.0 / R));
    CHECK(var == Approx(2.0 / 21.0).epsilon(0.10));
}

TEST_CASE("sampling is deterministic and per-multipole", "[bandsim]") {
    const auto model = SpectrumModel::kappa(2.5, 1.0, 1.0);
    const auto a = sample_empirical_spectrum(model, 300, 42, 3);
    const auto b = sample_empirical_spectrum(model, 300, 42, 3);
    CHECK(a.values == b.values);
    CHECK(sample_empirical_spectrum(model, 300, 42, 4).values != a.values);
    CHECK(sample_empirical_spectrum(model, 300, 43, 3).values != a.values);

    // a shorter or shifted range reproduces the shared multipoles exactly
    const auto sub = sample_empirical_spectrum(model, 200, 42, 3, 50);
    for (std::int64_t l = 50; l <= 200; ++l) CHECK(sub.at(l) == a.at(l));

    // C^_l / C_l does not depend on the model: scaling G0 scales C^_l
    const auto scaled = sample_empirical_spectrum(SpectrumModel::kappa(2.5, 5.0, 1.0), 300, 42, 3);
    for (std::int64_t l = 1; l <= 300; l += 13) CHECK(scaled.at(l) == Approx(5.0 * a.at(l)).epsilon(1e-14));
    CHECK_THROWS_AS(a.at(0), RangeError);
    CHECK_THROWS_AS(a.at(301), RangeError);
}

TEST_CASE("band powers of simple inputs", "[bandsim]") {
    const oracle::Window ref(2.0);
    const auto bands = BandDecomposition::up_to_multipole(Window(2.0), 64);

    EmpiricalSpectrum ones;
    ones.l_min = 1;
    ones.L = 64;
    ones.values.assign(64, 1.0);
    const auto t = band_powers(ones, bands);
    double expect = 0.0;
    for (int l = 5; l <= 15; ++l) expect += ref(l / 8.0) * (2.0 * l + 1.0);
    CHECK(t.at(3) == Approx(expect).epsilon(1e-9));

    // noise-free input gives sum b^2 (2l+1) C_l
    const auto model = SpectrumModel::pure(3.0, 2.0);
    const auto ex = expected_spectrum(model, 64);
    const auto te = band_powers(ex, bands);
    for (int j = 1; j <= bands.j_max(); ++j) {
        double e = 0.0;
        for (std::int64_t l = 1; l <= 64; ++l) e += ref(l / std::pow(2.0, j)) * (2.0 * l + 1.0) * model.cl(l);
        CHECK(te.at(j) == Approx(e).epsilon(1e-9));
    }

    // a band reaching past the observed range is an error
    const auto wide = BandDecomposition::up_to_multipole(Window(2.0), 256);
    CHECK_THROWS_AS(band_powers(ones, wide), RangeError);
    CHECK_THROWS_AS(t.at(42), RangeError);
}

TEST_CASE("band power variance and covariance follow the window integrals", "[bandsim][slow]") {
    // Exact second moments: Var T_j = sum b^4 (2l+1)^2 C_l^2 * 2/(2l+1), etc.
    const double B = 2.0, a0 = 2.0;
    const auto model = SpectrumModel::pure(a0, 1.0, {1.5, 10.0});
    const auto c = variance_constants(B, a0);
    const Window w(B);
    const int j = 9;
    double var = 0.0, cov = 0.0;
    for (std::int64_t l = 1; l < 2048; ++l) {
        const double b0 = w.squared(l / std::pow(B, j));
        const double b1 = w.squared(l / std::pow(B, j + 1));
        const double v = 2.0 * (2.0 * l + 1.0) * model.cl(l) * model.cl(l);
        var += b0 * b0 * v;
        cov += b0 * b1 * v;
    }
    const double norm = std::pow(B, 2.0 * (1.0 - a0) * j);
    CHECK(var / norm == Approx(c.sigma2).epsilon(0.01));
    CHECK(cov / norm == Approx(c.tau_plus2).epsilon(0.01));
}

TEST_CASE("spectrum CSV round trip and validation", "[bandsim]") {
    const auto model = SpectrumModel::pure(3.0, 2.0);
    const auto spec = sample_empirical_spectrum(model, 50, 9, 0, 2);
    std::stringstream ss;
    write_spectrum_csv(ss, spec, &model);
    const auto back = read_spectrum_csv(ss);
    CHECK(back.l_min == 2);
    CHECK(back.L == 50);
    CHECK(back.values == spec.values);

    std::istringstream gap("l,cl_hat\n1,1.0\n2,1.0\n5,1.0\n");
    try {
        read_spectrum_csv(gap);
        FAIL("gap not detected");
    } catch (const RangeError& e) {
        CHECK(std::string(e.what()).find("missing multipoles 3..4") != std::string::npos);
    }
    std::istringstream dup("l,cl_hat\n1,1.0\n1,1.0\n");
    CHECK_THROWS_AS(read_spectrum_csv(dup), InvalidArgument);
    std::istringstream neg("l,cl_hat\n1,-1.0\n");
    CHECK_THROWS_AS(read_spectrum_csv(neg), InvalidArgument);
    std::istringstream hdr("ell,c\n1,1.0\n");
    CHECK_THROWS_AS(read_spectrum_csv(hdr), InvalidArgument);
    std::istringstream junk("l,cl_hat\n1,abc\n");
    CHECK_THROWS_AS(read_spectrum_csv(junk), InvalidArgument);
    std::istringstream comment("# generated\nl,cl_true,cl_hat\n3,,0.5\n4,,0.25\n");
    const auto c = read_spectrum_csv(comment);
    CHECK(c.l_min == 3);
    CHECK(c.at(4) == 0.25);
}
