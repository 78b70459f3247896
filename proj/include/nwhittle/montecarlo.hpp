#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "nwhittle/asymptotics.hpp"
#include "nwhittle/bandsim.hpp"
#include "nwhittle/error.hpp"
#include "nwhittle/estimator.hpp"
#include "nwhittle/shapiro_wilk.hpp"
#include "nwhittle/spectrum.hpp"
#include "nwhittle/window.hpp"

namespace nwhittle {

enum class EstimatorKind { NeedletFull, NeedletNarrow, FourierFull, FourierNarrow };

inline const char* to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::NeedletFull: return "needlet_full";
        case EstimatorKind::NeedletNarrow: return "needlet_narrow";
        case EstimatorKind::FourierFull: return "fourier_full";
        case EstimatorKind::FourierNarrow: return "fourier_narrow";
    }
    return "?";
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
    for (auto k : {EstimatorKind::NeedletFull, EstimatorKind::NeedletNarrow, EstimatorKind::FourierFull,
                   EstimatorKind::FourierNarrow})
        if (s == to_string(k)) return k;
    throw InvalidArgument("unknown estimator '" + s + "'");
}

inline bool is_narrow(EstimatorKind k) {
    return k == EstimatorKind::NeedletNarrow || k == EstimatorKind::FourierNarrow;
}

/// How the narrow band J1..J_L is chosen.
struct NarrowSchedule {
    enum class Kind { InverseCube, Constant, ExplicitJ1, ExplicitL1 };
    Kind kind = Kind::InverseCube;
    double g = 0.0;         // Constant
    int j1 = 0;             // ExplicitJ1
    std::int64_t l1 = 0;    // ExplicitL1

    static NarrowSchedule inverse_cube() { return {}; }
    static NarrowSchedule constant(double g) { return {Kind::Constant, g, 0, 0}; }
    static NarrowSchedule explicit_j1(int j1) { return {Kind::ExplicitJ1, 0.0, j1, 0}; }
    static NarrowSchedule explicit_l1(std::int64_t l1) { return {Kind::ExplicitL1, 0.0, 0, l1}; }
};

inline const char* to_string(NarrowSchedule::Kind k) {
    switch (k) {
        case NarrowSchedule::Kind::InverseCube: return "inverse_cube";
        case NarrowSchedule::Kind::Constant: return "constant";
        case NarrowSchedule::Kind::ExplicitJ1: return "j1";
        case NarrowSchedule::Kind::ExplicitL1: return "l1";
    }
    return "?";
}

struct ExperimentConfig {
    SpectrumModel model = SpectrumModel::pure(3.0, 1.0);
    double B = 2.0;
    std::int64_t L = 1024;
    std::int64_t l_min = 1;
    std::vector<EstimatorKind> estimators{EstimatorKind::NeedletFull, EstimatorKind::FourierFull};
    int replications = 1000;
    std::uint64_t seed = 20240501;
    NarrowSchedule narrow{};
    EstimatorConfig estimator{};
    double quad_tol = 1e-12;

    bool wants(EstimatorKind k) const {
        return std::find(estimators.begin(), estimators.end(), k) != estimators.end();
    }

    void validate() const {
        detail::require(B > 1.0, "B must be > 1");
        detail::require(replications >= 2, "replications must be >= 2");
        detail::require(l_min >= 1, "l_min must be >= 1");
        detail::require(L > l_min, "L must exceed l_min");
        detail::require(!estimators.empty(), "at least one estimator is required");
        estimator.validate();
        const int JL = max_scale_for(L, B);
        detail::require(JL >= 2, "L too small for B: need J_L >= 2");
    }
};

/// Scale and multipole ranges implied by a config.
struct ResolvedRanges {
    int J_L = 0;
    int J1 = 0;               // narrow band start
    double g = 0.0;           // effective 1 - B^{J1-J_L}
    std::int64_t l1 = 0;      // Fourier narrow-band start
};

inline ResolvedRanges resolve_ranges(const ExperimentConfig& c) {
    ResolvedRanges r;
    r.J_L = max_scale_for(c.L, c.B);
    const double lb = std::log(c.B);
    switch (c.narrow.kind) {
        case NarrowSchedule::Kind::InverseCube:
            r.J1 = narrow_band_range(r.J_L, c.B, inverse_cube_schedule(r.J_L));
            break;
        case NarrowSchedule::Kind::Constant:
            r.J1 = narrow_band_range(r.J_L, c.B, c.narrow.g);
            break;
        case NarrowSchedule::Kind::ExplicitJ1:
            r.J1 = c.narrow.j1;
            break;
        case NarrowSchedule::Kind::ExplicitL1: {
            detail::require(c.narrow.l1 > c.l_min && c.narrow.l1 < c.L, "narrow l1 must lie strictly inside (l_min, L)");
            const double shift = std::log(static_cast<double>(c.L) / static_cast<double>(c.narrow.l1)) / lb;
            r.J1 = r.J_L - static_cast<int>(std::lround(shift));
            break;
        }
    }
    detail::require(r.J1 >= 0 && r.J1 < r.J_L, "narrow band needs 0 <= J1 < J_L");
    r.g = 1.0 - std::pow(c.B, r.J1 - r.J_L);
    if (c.narrow.kind == NarrowSchedule::Kind::ExplicitL1) {
        r.l1 = c.narrow.l1;
    } else {
        r.l1 = std::max<std::int64_t>(c.l_min, std::llround(static_cast<double>(c.L) * (1.0 - r.g)));
    }
    return r;
}

struct ReplicationRecord {
    int rep = 0;
    EstimatorKind estimator = EstimatorKind::NeedletFull;
    std::optional<EstimateResult> result;
    std::string error;

    bool ok() const { return result.has_value(); }
};

namespace detail {

struct ExperimentPlan {
    ResolvedRanges ranges;
    BandDecomposition bands;
    std::optional<KCache> full;
    std::optional<KCache> narrow;
};

inline ExperimentPlan make_plan(const ExperimentConfig& c) {
    const Window window(c.B, c.quad_tol);
    ExperimentPlan plan{resolve_ranges(c), BandDecomposition::up_to_multipole(window, c.L, c.l_min), {}, {}};
    if (c.wants(EstimatorKind::NeedletFull)) plan.full.emplace(plan.bands);
    if (c.wants(EstimatorKind::NeedletNarrow)) plan.narrow.emplace(plan.bands, plan.ranges.J1, plan.ranges.J_L);
    return plan;
}

inline EstimateResult run_one(EstimatorKind k, const ExperimentConfig& c, const ExperimentPlan& plan,
                              const EmpiricalSpectrum& spec, const BandPowers& powers) {
    switch (k) {
        case EstimatorKind::NeedletFull: return minimize_profile(powers, *plan.full, c.estimator);
        case EstimatorKind::NeedletNarrow: return minimize_profile(powers, *plan.narrow, c.estimator);
        case EstimatorKind::FourierFull: {
            EstimatorConfig e = c.estimator;
            e.baseline_l_range = std::make_pair(c.l_min, c.L);
            return fourier_whittle_estimate(spec, e);
        }
        case EstimatorKind::FourierNarrow: {
            EstimatorConfig e = c.estimator;
            e.baseline_l_range = std::make_pair(plan.ranges.l1, c.L);
            return fourier_whittle_estimate(spec, e);
        }
    }
    throw InvalidArgument("unknown estimator");
}

}  // namespace detail

/// Runs R replications; records are ordered (rep, estimator) whatever the thread count.
/// threads == 0 uses the hardware concurrency.
inline std::vector<ReplicationRecord> run_experiment(const ExperimentConfig& config, unsigned threads = 0) {
    config.validate();
    const auto plan = detail::make_plan(config);
    const std::size_t ne = config.estimators.size();
    const int R = config.replications;
    std::vector<ReplicationRecord> out(static_cast<std::size_t>(R) * ne);

    auto work = [&](int rep) {
        const auto spec = sample_empirical_spectrum(config.model, config.L, config.seed,
                                                    static_cast<std::uint64_t>(rep), config.l_min);
        std::optional<BandPowers> powers;
        std::string power_error;
        try {
            powers = band_powers(spec, plan.bands);
        } catch (const std::exception& e) {
            power_error = e.what();
        }
        for (std::size_t i = 0; i < ne; ++i) {
            auto& rec = out[static_cast<std::size_t>(rep) * ne + i];
            rec.rep = rep;
            rec.estimator = config.estimators[i];
            try {
                if (!powers && !(rec.estimator == EstimatorKind::FourierFull ||
                                 rec.estimator == EstimatorKind::FourierNarrow))
                    throw EstimationError(power_error);
                static const BandPowers none{};
                rec.result = detail::run_one(rec.estimator, config, plan, spec, powers ? *powers : none);
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(R));
    if (threads <= 1) {
        for (int rep = 0; rep < R; ++rep) work(rep);
        return out;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int rep = next.fetch_add(1); rep < R; rep = next.fetch_add(1)) work(rep);
        });
    for (auto& th : pool) th.join();
    return out;
}

struct SummaryRow {
    EstimatorKind estimator = EstimatorKind::NeedletFull;
    int n_total = 0;
    int n_used = 0;
    int n_failed = 0;    // estimator threw
    int n_boundary = 0;  // hit the edge of the alpha range
    double mean = std::numeric_limits<double>::quiet_NaN();
    double sd = std::numeric_limits<double>::quiet_NaN();
    /// Predicted variance of alpha_hat used as the denominator of normalized_ratio.
    double predicted_var = std::numeric_limits<double>::quiet_NaN();
    double normalized_ratio = std::numeric_limits<double>::quiet_NaN();
    double sw_w = std::numeric_limits<double>::quiet_NaN();
    double sw_p = std::numeric_limits<double>::quiet_NaN();
};

/// Mean, sd (n-1), ratio sd^2 / predicted_var and Shapiro-Wilk of a set of estimates.
inline SummaryRow summarize_values(EstimatorKind k, const std::vector<double>& values, double predicted_var) {
    if (values.size() < 2) throw EstimationError(std::string("too few successful replications for ") + to_string(k));
    SummaryRow row;
    row.estimator = k;
    row.n_total = row.n_used = static_cast<int>(values.size());
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    row.mean = mean;
    row.sd = std::sqrt(ss / (n - 1.0));
    row.predicted_var = predicted_var;
    row.normalized_ratio = row.sd * row.sd / predicted_var;
    if (values.size() >= 3 && values.size() <= 5000 && ss > 0.0) {
        const auto sw = shapiro_wilk(values);
        row.sw_w = sw.w;
        row.sw_p = sw.p;
    }
    return row;
}

/// Predicted Var(alpha_hat) for each estimator.
///   needlet full:   B^2 D / L^2
///   fourier full:   8 / L^2
///   needlet narrow: rho^2 / (Phi g B^{2 J_L})
///   fourier narrow: 2 / sum (2l+1)(log l - mean log)^2 over l1..L (exact least-squares variance)
inline double predicted_variance(EstimatorKind k, const ExperimentConfig& c, const ResolvedRanges& r,
                                 const AsymptoticConstants& ac) {
    const double L = static_cast<double>(c.L);
    switch (k) {
        case EstimatorKind::NeedletFull: return ac.b2d / (L * L);
        case EstimatorKind::FourierFull: return 8.0 / (L * L);
        case EstimatorKind::NeedletNarrow: return ac.rho2 / (ac.phi * r.g * std::pow(c.B, 2.0 * r.J_L));
        case EstimatorKind::FourierNarrow: {
            double w = 0.0, wl = 0.0;
            for (std::int64_t l = r.l1; l <= c.L; ++l) {
                const double d = 2.0 * static_cast<double>(l) + 1.0;
                w += d;
                wl += d * std::log(static_cast<double>(l));
            }
            const double m = wl / w;
            double s = 0.0;
            for (std::int64_t l = r.l1; l <= c.L; ++l) {
                const double d = std::log(static_cast<double>(l)) - m;
                s += (2.0 * static_cast<double>(l) + 1.0) * d * d;
            }
            return 2.0 / s;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// One summary row per configured estimator. Failed and boundary rows are excluded but counted.
inline std::vector<SummaryRow> summarize(const std::vector<ReplicationRecord>& records, const ExperimentConfig& c,
                                         const AsymptoticConstants& ac) {
    const auto r = resolve_ranges(c);
    std::vector<SummaryRow> rows;
    for (auto k : c.estimators) {
        std::vector<double> values;
        int total = 0, failed = 0, boundary = 0;
        for (const auto& rec : records) {
            if (rec.estimator != k) continue;
            ++total;
            if (!rec.ok()) {
                ++failed;
            } else if (rec.result->boundary_flag) {
                ++boundary;
            } else {
                values.push_back(rec.result->alpha_hat);
            }
        }
        SummaryRow row = summarize_values(k, values, predicted_variance(k, c, r, ac));
        row.n_total = total;
        row.n_failed = failed;
        row.n_boundary = boundary;
        rows.push_back(row);
    }
    return rows;
}

inline std::vector<SummaryRow> summarize(const std::vector<ReplicationRecord>& records, const ExperimentConfig& c) {
    return summarize(records, c, variance_constants(c.B, c.model.alpha0(), c.quad_tol, c.model.effective_kappa()));
}

/// Estimates of one estimator in replication order; failed or boundary rows skipped.
inline std::vector<double> alpha_hats(const std::vector<ReplicationRecord>& records, EstimatorKind k) {
    std::vector<double> v;
    for (const auto& rec : records)
        if (rec.estimator == k && rec.ok() && !rec.result->boundary_flag) v.push_back(rec.result->alpha_hat);
    return v;
}

inline void write_replication_csv(std::ostream& os, const std::vector<ReplicationRecord>& records) {
    const auto prec = os.precision(17);
    os << "rep,estimator,alpha_hat,g_hat,boundary_flag\n";
    for (const auto& r : records) {
        os << r.rep << ',' << to_string(r.estimator) << ',';
        if (r.ok())
            os << r.result->alpha_hat << ',' << r.result->g_hat << ',' << (r.result->boundary_flag ? 1 : 0);
        else
            os << "nan,nan,nan";
        os << '\n';
    }
    os.precision(prec);
}

inline void write_summary_header(std::ostream& os) {
    os << "B,L,alpha0,G0,kappa,estimator,j_lo,j_hi,l_lo,replications,n_used,n_failed,n_boundary,"
          "mean,sd,predicted_sd,normalized_ratio,sw_w,sw_p\n";
}

inline void write_summary_rows(std::ostream& os, const std::vector<SummaryRow>& rows, const ExperimentConfig& c) {
    const auto r = resolve_ranges(c);
    const auto prec = os.precision(17);
    for (const auto& s : rows) {
        const bool narrow = is_narrow(s.estimator);
        const bool needlet = s.estimator == EstimatorKind::NeedletFull || s.estimator == EstimatorKind::NeedletNarrow;
        os << c.B << ',' << c.L << ',' << c.model.alpha0() << ',' << c.model.G0() << ',' << c.model.effective_kappa()
           << ',' << to_string(s.estimator) << ',';
        if (needlet)
            os << (narrow ? r.J1 : 0) << ',' << r.J_L << ",,";
        else
            os << ",," << (narrow ? r.l1 : c.l_min) << ',';
        os << s.n_total << ',' << s.n_used << ',' << s.n_failed << ',' << s.n_boundary << ',' << s.mean << ','
           << s.sd << ',' << std::sqrt(s.predicted_var) << ',' << s.normalized_ratio << ',' << s.sw_w << ','
           << s.sw_p << '\n';
    }
    os.precision(prec);
}

}  // namespace nwhittle
