#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nwhittle/error.hpp"
#include "nwhittle/montecarlo.hpp"
#include "nwhittle/random.hpp"

namespace nwhittle {

/// Malformed or inconsistent configuration; the message names the line or field.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A simulation request: one base experiment plus a grid over (B, L, alpha0).
/// Every grid cell gets its own seed derived from (seed, cell index).
struct SimulationPlan {
    std::string name = "experiment";
    SpectrumForm form = SpectrumForm::Pure;
    double G0 = 1.0;
    double kappa = 0.0;
    std::vector<double> p;
    std::vector<double> q;
    double delta = 0.0;
    std::vector<double> B{2.0};
    std::vector<std::int64_t> L{1024};
    std::vector<double> alpha0{3.0};
    std::int64_t l_min = 1;
    std::vector<EstimatorKind> estimators{EstimatorKind::NeedletFull, EstimatorKind::FourierFull};
    int replications = 1000;
    std::uint64_t seed = 20240501;
    NarrowSchedule narrow{};
    ParameterRange alpha_range{2.01, 10.0};
    GRange g_range{};
    double opt_tol = 1e-6;
    int prescan_points = 64;
    double quad_tol = 1e-12;

    std::size_t cells() const { return B.size() * L.size() * alpha0.size(); }
};

namespace detail {

using json = nlohmann::json;

inline std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("field '" + (path.empty() ? std::string("<root>") : path) + "': expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError("field '" + join_path(path, it.key()) + "': unknown key");
}

template <class T>
void read_field(const json& j, const std::string& path, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + join_path(path, key) + "': " + e.what());
    }
}

/// Accepts either a scalar or a list.
template <class T>
void read_list(const json& j, const std::string& path, const char* key, std::vector<T>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    try {
        out = v.is_array() ? v.get<std::vector<T>>() : std::vector<T>{v.get<T>()};
    } catch (const json::exception& e) {
        throw ConfigError("field '" + join_path(path, key) + "': " + e.what());
    }
}

inline void read_interval(const json& j, const std::string& path, const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    std::vector<double> v;
    read_field(j, path, key, v);
    if (v.size() != 2) throw ConfigError("field '" + join_path(path, key) + "': expected [lo, hi]");
    lo = v[0];
    hi = v[1];
}

}  // namespace detail

inline SimulationPlan plan_from_json(const nlohmann::json& j) {
    using detail::read_field;
    SimulationPlan p;
    detail::reject_unknown(j, "", {"name", "model", "grid", "l_min", "estimators", "replications", "seed", "narrow",
                                   "estimator", "quad_tol"});
    read_field(j, "", "name", p.name);
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::reject_unknown(m, "model", {"form", "G0", "kappa", "p", "q", "delta"});
        std::string form = to_string(p.form);
        read_field(m, "model", "form", form);
        try {
            p.form = spectrum_form_from_string(form);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("field 'model.form': ") + e.what());
        }
        read_field(m, "model", "G0", p.G0);
        read_field(m, "model", "kappa", p.kappa);
        read_field(m, "model", "p", p.p);
        read_field(m, "model", "q", p.q);
        read_field(m, "model", "delta", p.delta);
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::reject_unknown(g, "grid", {"B", "L", "alpha0"});
        detail::read_list(g, "grid", "B", p.B);
        detail::read_list(g, "grid", "L", p.L);
        detail::read_list(g, "grid", "alpha0", p.alpha0);
    }
    read_field(j, "", "l_min", p.l_min);
    if (j.contains("estimators")) {
        std::vector<std::string> names;
        detail::read_list(j, "", "estimators", names);
        p.estimators.clear();
        for (const auto& n : names) {
            try {
                p.estimators.push_back(estimator_kind_from_string(n));
            } catch (const std::exception& e) {
                throw ConfigError(std::string("field 'estimators': ") + e.what());
            }
        }
    }
    read_field(j, "", "replications", p.replications);
    read_field(j, "", "seed", p.seed);
    if (j.contains("narrow")) {
        const auto& n = j.at("narrow");
        detail::reject_unknown(n, "narrow", {"schedule", "g", "j1", "l1"});
        std::string s = "inverse_cube";
        read_field(n, "narrow", "schedule", s);
        if (s == "inverse_cube") {
            p.narrow = NarrowSchedule::inverse_cube();
        } else if (s == "constant") {
            double g = 0.0;
            if (!n.contains("g")) throw ConfigError("field 'narrow.g': required for schedule 'constant'");
            read_field(n, "narrow", "g", g);
            p.narrow = NarrowSchedule::constant(g);
        } else if (s == "j1") {
            int j1 = 0;
            if (!n.contains("j1")) throw ConfigError("field 'narrow.j1': required for schedule 'j1'");
            read_field(n, "narrow", "j1", j1);
            p.narrow = NarrowSchedule::explicit_j1(j1);
        } else if (s == "l1") {
            std::int64_t l1 = 0;
            if (!n.contains("l1")) throw ConfigError("field 'narrow.l1': required for schedule 'l1'");
            read_field(n, "narrow", "l1", l1);
            p.narrow = NarrowSchedule::explicit_l1(l1);
        } else {
            throw ConfigError("field 'narrow.schedule': expected inverse_cube, constant, j1 or l1");
        }
    }
    if (j.contains("estimator")) {
        const auto& e = j.at("estimator");
        detail::reject_unknown(e, "estimator", {"alpha_range", "g_range", "opt_tol", "prescan_points"});
        detail::read_interval(e, "estimator", "alpha_range", p.alpha_range.lo, p.alpha_range.hi);
        detail::read_interval(e, "estimator", "g_range", p.g_range.lo, p.g_range.hi);
        read_field(e, "estimator", "opt_tol", p.opt_tol);
        read_field(e, "estimator", "prescan_points", p.prescan_points);
    }
    read_field(j, "", "quad_tol", p.quad_tol);
    return p;
}

/// Parses JSON text; syntax errors report line and column.
inline SimulationPlan parse_plan(std::istream& is) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }
    return plan_from_json(j);
}

inline SimulationPlan parse_plan(const std::string& text) {
    std::istringstream is(text);
    return parse_plan(is);
}

/// Fully resolved JSON (all defaults spelled out); plan_from_json(plan_to_json(p)) reproduces p.
inline nlohmann::json plan_to_json(const SimulationPlan& p) {
    nlohmann::json j;
    j["name"] = p.name;
    j["model"] = {{"form", to_string(p.form)}, {"G0", p.G0}, {"kappa", p.kappa}, {"p", p.p}, {"q", p.q},
                  {"delta", p.delta}};
    j["grid"] = {{"B", p.B}, {"L", p.L}, {"alpha0", p.alpha0}};
    j["l_min"] = p.l_min;
    std::vector<std::string> est;
    for (auto k : p.estimators) est.emplace_back(to_string(k));
    j["estimators"] = est;
    j["replications"] = p.replications;
    j["seed"] = p.seed;
    nlohmann::json n = {{"schedule", to_string(p.narrow.kind)}};
    switch (p.narrow.kind) {
        case NarrowSchedule::Kind::Constant: n["g"] = p.narrow.g; break;
        case NarrowSchedule::Kind::ExplicitJ1: n["j1"] = p.narrow.j1; break;
        case NarrowSchedule::Kind::ExplicitL1: n["l1"] = p.narrow.l1; break;
        default: break;
    }
    j["narrow"] = n;
    j["estimator"] = {{"alpha_range", {p.alpha_range.lo, p.alpha_range.hi}},
                      {"g_range", {p.g_range.lo, p.g_range.hi}},
                      {"opt_tol", p.opt_tol},
                      {"prescan_points", p.prescan_points}};
    j["quad_tol"] = p.quad_tol;
    return j;
}

inline SpectrumModel make_model(const SimulationPlan& p, double alpha0) {
    switch (p.form) {
        case SpectrumForm::Pure: return SpectrumModel::pure(alpha0, p.G0, p.alpha_range);
        case SpectrumForm::Kappa: return SpectrumModel::kappa(alpha0, p.G0, p.kappa, p.alpha_range);
        case SpectrumForm::Rational: return SpectrumModel::rational(alpha0, p.G0, p.p, p.q, p.delta, p.alpha_range);
    }
    throw ConfigError("unknown model form");
}

/// Grid cells in (B, L, alpha0) row-major order.
inline std::vector<ExperimentConfig> expand(const SimulationPlan& p) {
    if (p.cells() == 0) throw ConfigError("field 'grid': the grid is empty");
    std::vector<ExperimentConfig> out;
    std::uint64_t cell = 0;
    for (double B : p.B)
        for (auto L : p.L)
            for (double a0 : p.alpha0) {
                ExperimentConfig c;
                try {
                    c.model = make_model(p, a0);
                } catch (const std::exception& e) {
                    throw ConfigError("field 'model' at alpha0=" + std::to_string(a0) + ": " + e.what());
                }
                c.B = B;
                c.L = L;
                c.l_min = p.l_min;
                c.estimators = p.estimators;
                c.replications = p.replications;
                c.seed = derive_seed(p.seed, cell++, 0);
                c.narrow = p.narrow;
                c.estimator.alpha_range = p.alpha_range;
                c.estimator.g_range = p.g_range;
                c.estimator.opt_tol = p.opt_tol;
                c.estimator.prescan_points = p.prescan_points;
                c.quad_tol = p.quad_tol;
                try {
                    c.validate();
                    if (std::find_if(c.estimators.begin(), c.estimators.end(), is_narrow) != c.estimators.end())
                        resolve_ranges(c);
                } catch (const std::exception& e) {
                    throw ConfigError("grid cell (B=" + std::to_string(B) + ", L=" + std::to_string(L) +
                                      ", alpha0=" + std::to_string(a0) + "): " + e.what());
                }
                out.push_back(std::move(c));
            }
    return out;
}

}  // namespace nwhittle
