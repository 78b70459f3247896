#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nwhittle/error.hpp"

namespace nwhittle {

/// Closed interval of admissible spectral indices.
struct ParameterRange {
    double lo = 2.01;
    double hi = 10.0;

    bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

enum class SpectrumForm { Pure, Kappa, Rational };

inline const char* to_string(SpectrumForm f) {
    switch (f) {
        case SpectrumForm::Pure: return "pure";
        case SpectrumForm::Kappa: return "kappa";
        case SpectrumForm::Rational: return "rational";
    }
    return "?";
}

inline SpectrumForm spectrum_form_from_string(const std::string& s) {
    if (s == "pure") return SpectrumForm::Pure;
    if (s == "kappa") return SpectrumForm::Kappa;
    if (s == "rational") return SpectrumForm::Rational;
    throw InvalidArgument("unknown spectrum form '" + s + "' (expected pure, kappa or rational)");
}

/// C_l = l^{-alpha0} G(l) with G one of
///   Pure:     G0
///   Kappa:    G0 (1 + kappa / l)
///   Rational: G0 (log l)^delta P(l) / Q(l)
class SpectrumModel {
public:
    static SpectrumModel pure(double alpha0, double G0, ParameterRange range = {}) {
        return SpectrumModel(SpectrumForm::Pure, alpha0, G0, 0.0, 0.0, {}, {}, range);
    }

    static SpectrumModel kappa(double alpha0, double G0, double kappa, ParameterRange range = {}) {
        return SpectrumModel(SpectrumForm::Kappa, alpha0, G0, kappa, 0.0, {}, {}, range);
    }

    /// Coefficients are in increasing degree order: p[0] + p[1] l + ...
    static SpectrumModel rational(double alpha0, double G0, std::vector<double> p, std::vector<double> q,
                                  double delta = 0.0, ParameterRange range = {}) {
        return SpectrumModel(SpectrumForm::Rational, alpha0, G0, 0.0, delta, std::move(p), std::move(q),
                             range);
    }

    SpectrumForm form() const noexcept { return form_; }
    double alpha0() const noexcept { return alpha0_; }
    double G0() const noexcept { return G0_; }
    double kappa() const noexcept { return kappa_; }
    double delta() const noexcept { return delta_; }
    const std::vector<double>& p() const noexcept { return p_; }
    const std::vector<double>& q() const noexcept { return q_; }
    const ParameterRange& range() const noexcept { return range_; }

    double G(std::int64_t l) const {
        detail::require(l >= 1, "multipole must be >= 1");
        const double x = static_cast<double>(l);
        switch (form_) {
            case SpectrumForm::Pure: return G0_;
            case SpectrumForm::Kappa: return G0_ * (1.0 + kappa_ / x);
            case SpectrumForm::Rational: {
                const double P = horner(p_, x);
                const double Q = horner(q_, x);
                if (Q == 0.0) throw ModelError("rational spectrum: Q(l) = 0 at l = " + std::to_string(l));
                if (P <= 0.0 || Q < 0.0)
                    throw ModelError("rational spectrum: P(l), Q(l) must be positive at l = " + std::to_string(l));
                const double logpart = delta_ == 0.0 ? 1.0 : std::pow(std::log(x), delta_);
                return G0_ * logpart * P / Q;
            }
        }
        return 0.0;
    }

    double cl(std::int64_t l) const {
        const double value = std::pow(static_cast<double>(l), -alpha0_) * G(l);
        if (!(value > 0.0) || !std::isfinite(value))
            throw ModelError("spectrum is not positive at l = " + std::to_string(l));
        return value;
    }

    /// First-order correction kappa in G(l) = G0 (1 + kappa / l + O(l^-2)).
    double effective_kappa() const {
        switch (form_) {
            case SpectrumForm::Pure: return 0.0;
            case SpectrumForm::Kappa: return kappa_;
            case SpectrumForm::Rational: {
                if (delta_ != 0.0)
                    throw InvalidArgument("effective kappa is undefined for a log factor (delta != 0)");
                const std::size_t m = p_.size() - 1;
                if (m == 0) return 0.0;
                return p_[m - 1] / p_[m] - q_[m - 1] / q_[m];
            }
        }
        return 0.0;
    }

private:
    SpectrumModel(SpectrumForm form, double alpha0, double G0, double kappa, double delta,
                  std::vector<double> p, std::vector<double> q, ParameterRange range)
        : form_(form), alpha0_(alpha0), G0_(G0), kappa_(kappa), delta_(delta),
          p_(std::move(p)), q_(std::move(q)), range_(range) {
        detail::require(range_.lo > 0.0 && range_.lo < range_.hi, "invalid alpha range");
        detail::require(range_.contains(alpha0_), "alpha0 = " + std::to_string(alpha0_) +
                                                       " outside the admissible range [" +
                                                       std::to_string(range_.lo) + ", " +
                                                       std::to_string(range_.hi) + "]");
        detail::require(G0_ > 0.0 && std::isfinite(G0_), "G0 must be positive");
        if (form_ == SpectrumForm::Rational) {
            trim(p_);
            trim(q_);
            detail::require(!p_.empty() && !q_.empty(), "rational spectrum needs non-zero P and Q");
            detail::require(p_.size() == q_.size(),
                            "rational spectrum needs deg P == deg Q so that G(l) stays bounded");
            detail::require(p_.back() / q_.back() > 0.0, "leading coefficients of P and Q must share a sign");
        }
    }

    static double horner(const std::vector<double>& c, double x) {
        double acc = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    static void trim(std::vector<double>& c) {
        while (!c.empty() && c.back() == 0.0) c.pop_back();
    }

    SpectrumForm form_;
    double alpha0_;
    double G0_;
    double kappa_;
    double delta_;
    std::vector<double> p_;
    std::vector<double> q_;
    ParameterRange range_;
};

inline double cl_value(const SpectrumModel& model, std::int64_t l) { return model.cl(l); }
inline double effective_kappa(const SpectrumModel& model) { return model.effective_kappa(); }

}  // namespace nwhittle
