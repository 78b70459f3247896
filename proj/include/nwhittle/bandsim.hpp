#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nwhittle/error.hpp"
#include "nwhittle/random.hpp"
#include "nwhittle/spectrum.hpp"
#include "nwhittle/window.hpp"

namespace nwhittle {

/// Empirical angular power spectrum C^_l for l = l_min..L.
struct EmpiricalSpectrum {
    std::int64_t l_min = 1;
    std::int64_t L = 0;
    std::vector<double> values;
    std::uint64_t seed = 0;

    std::int64_t size() const noexcept { return static_cast<std::int64_t>(values.size()); }
    bool covers(std::int64_t l) const noexcept { return l >= l_min && l <= L; }

    double at(std::int64_t l) const {
        if (!covers(l))
            throw RangeError("multipole " + std::to_string(l) + " outside observed range [" +
                             std::to_string(l_min) + ", " + std::to_string(L) + "]");
        return values[static_cast<std::size_t>(l - l_min)];
    }
};

/// Seed of the chi-square stream of multipole l in replication `replication`.
inline std::uint64_t multipole_stream_seed(std::uint64_t seed, std::uint64_t replication, std::int64_t l) {
    return derive_seed(seed, replication, static_cast<std::uint64_t>(l));
}

/// C^_l = C_l X_l / (2l + 1) with X_l ~ chi^2_{2l+1}; multipole l draws from its own
/// stream keyed on (seed, replication, l).
inline EmpiricalSpectrum sample_empirical_spectrum(const SpectrumModel& model, std::int64_t L, std::uint64_t seed,
                                                   std::uint64_t replication = 0, std::int64_t l_min = 1) {
    detail::require(l_min >= 1, "l_min must be >= 1");
    detail::require(L >= l_min, "L must be >= l_min");
    EmpiricalSpectrum out;
    out.l_min = l_min;
    out.L = L;
    out.seed = seed;
    out.values.reserve(static_cast<std::size_t>(L - l_min + 1));
    for (std::int64_t l = l_min; l <= L; ++l) {
        Xoshiro256 rng(multipole_stream_seed(seed, replication, l));
        const double dof = 2.0 * static_cast<double>(l) + 1.0;
        out.values.push_back(model.cl(l) * sample_chi_square(rng, dof) / dof);
    }
    return out;
}

/// Noise-free spectrum C^_l = C_l.
inline EmpiricalSpectrum expected_spectrum(const SpectrumModel& model, std::int64_t L, std::int64_t l_min = 1) {
    EmpiricalSpectrum out;
    out.l_min = l_min;
    out.L = L;
    for (std::int64_t l = l_min; l <= L; ++l) out.values.push_back(model.cl(l));
    return out;
}

/// Per-scale band powers T_j = sum_k beta_jk^2 = sum_l b^2(l/B^j) (2l+1) C^_l.
struct BandPowers {
    std::vector<int> scales;
    std::vector<double> values;

    std::size_t size() const noexcept { return scales.size(); }
    int j_min() const { return scales.front(); }
    int j_max() const { return scales.back(); }

    double at(int j) const {
        for (std::size_t i = 0; i < scales.size(); ++i)
            if (scales[i] == j) return values[i];
        throw RangeError("no band power at scale j = " + std::to_string(j));
    }
};

inline BandPowers band_powers(const EmpiricalSpectrum& spec, const BandDecomposition& bands) {
    BandPowers out;
    for (const auto& band : bands.bands()) {
        if (band.back() > spec.L || band.front() < spec.l_min)
            throw RangeError("band j = " + std::to_string(band.j) + " needs multipoles " +
                             std::to_string(band.front()) + ".." + std::to_string(band.back()) +
                             " but the spectrum covers " + std::to_string(spec.l_min) + ".." +
                             std::to_string(spec.L));
        double t = 0.0;
        for (std::size_t i = 0; i < band.size(); ++i) {
            const auto l = band.multipoles[i];
            t += band.weights[i] * (2.0 * static_cast<double>(l) + 1.0) * spec.at(l);
        }
        out.scales.push_back(band.j);
        out.values.push_back(t);
    }
    return out;
}

/// CSV with columns l, cl_true, cl_hat.
inline void write_spectrum_csv(std::ostream& os, const EmpiricalSpectrum& spec, const SpectrumModel* model) {
    const auto old_precision = os.precision(17);
    os << "l,cl_true,cl_hat\n";
    for (std::int64_t l = spec.l_min; l <= spec.L; ++l) {
        os << l << ',';
        if (model != nullptr) os << model->cl(l);
        os << ',' << spec.at(l) << '\n';
    }
    os.precision(old_precision);
}

/// Reads a CSV with a header naming at least `l` and `cl_hat`. Multipoles must be
/// contiguous; a gap is reported with its bounds.
inline EmpiricalSpectrum read_spectrum_csv(std::istream& is) {
    std::string line;
    int line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(is, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            return true;
        }
        return false;
    };
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
        }
        return cells;
    };

    if (!next_line()) throw InvalidArgument("spectrum CSV is empty");
    const auto header = split(line);
    int col_l = -1;
    int col_hat = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "l") col_l = static_cast<int>(i);
        if (header[i] == "cl_hat") col_hat = static_cast<int>(i);
    }
    if (col_l < 0 || col_hat < 0)
        throw InvalidArgument("spectrum CSV header must contain columns 'l' and 'cl_hat'");

    EmpiricalSpectrum spec;
    bool first = true;
    while (next_line()) {
        const auto cells = split(line);
        const auto need = static_cast<std::size_t>(std::max(col_l, col_hat));
        if (cells.size() <= need)
            throw InvalidArgument("spectrum CSV line " + std::to_string(line_no) + ": too few columns");
        std::int64_t l = 0;
        double v = 0.0;
        try {
            l = std::stoll(cells[static_cast<std::size_t>(col_l)]);
            v = std::stod(cells[static_cast<std::size_t>(col_hat)]);
        } catch (const std::exception&) {
            throw InvalidArgument("spectrum CSV line " + std::to_string(line_no) + ": malformed number");
        }
        if (v < 0.0 || !std::isfinite(v))
            throw InvalidArgument("spectrum CSV line " + std::to_string(line_no) + ": cl_hat must be finite and >= 0");
        if (first) {
            detail::require(l >= 1, "spectrum CSV line " + std::to_string(line_no) + ": l must be >= 1");
            spec.l_min = l;
            spec.L = l - 1;
            first = false;
        }
        if (l <= spec.L)
            throw InvalidArgument("spectrum CSV line " + std::to_string(line_no) +
                                  ": multipoles must be strictly increasing");
        if (l != spec.L + 1)
            throw RangeError("spectrum CSV line " + std::to_string(line_no) + ": missing multipoles " +
                             std::to_string(spec.L + 1) + ".." + std::to_string(l - 1));
        spec.values.push_back(v);
        spec.L = l;
    }
    if (first) throw InvalidArgument("spectrum CSV has no data rows");
    return spec;
}

}  // namespace nwhittle
