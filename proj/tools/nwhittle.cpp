// nwhittle: asymptotic tables, Monte Carlo experiments and one-off estimates.
//
// Exit codes: 0 success, 1 runtime/estimation failure, 2 usage or configuration error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nwhittle/nwhittle.hpp"

#ifndef NWHITTLE_VERSION
#define NWHITTLE_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nwhittle;

namespace {

// Bad flags or values caught before any computation.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void usage_check(bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
}

std::string command_line(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

std::vector<double> parse_list(const std::string& s, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": not a number: '" + item + "'");
        }
    }
    return out;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    return os;
}

// ---------------------------------------------------------------- table1

struct Table1Args {
    std::vector<double> B{std::pow(2.0, 0.125), std::pow(2.0, 0.25), std::pow(2.0, 0.5), 2.0};
    std::vector<double> alpha0{2.0, 3.0, 4.0};
    double quad_tol = 1e-12;
    std::string out;
    bool pretty = false;
};

int cmd_table1(const Table1Args& a) {
    usage_check(!a.B.empty() && !a.alpha0.empty(), "table1: empty grid");
    for (double b : a.B) usage_check(std::isfinite(b) && b > 1.0, "table1: every B must be > 1");
    for (double al : a.alpha0) usage_check(std::isfinite(al) && al > 0.0, "table1: every alpha0 must be > 0");
    usage_check(a.quad_tol > 0.0, "table1: quad-tol must be positive");

    std::ofstream file;
    if (!a.out.empty()) file = open_out(a.out);
    std::ostream& os = a.out.empty() ? std::cout : file;

    if (a.pretty) {
        os << std::fixed << std::setprecision(2);
        os << "       B  alpha0   sigma2     tau2       I0     rho2      Psi        D      B2D\n";
        for (double B : a.B)
            for (double al : a.alpha0) {
                const auto c = variance_constants(B, al, a.quad_tol);
                os << std::setw(8) << B << std::setw(8) << al;
                for (double v : {c.sigma2, c.tau2, c.i0, c.rho2, c.psi, c.d, c.b2d}) os << std::setw(9) << v;
                os << '\n';
            }
        return 0;
    }
    os << std::setprecision(17);
    os << "B,alpha0,sigma2,tau2,tau_plus2,tau_minus2,I0,I1,I2,rho2,psi,D,B2D,phi\n";
    for (double B : a.B)
        for (double al : a.alpha0) {
            const auto c = variance_constants(B, al, a.quad_tol);
            os << B << ',' << al << ',' << c.sigma2 << ',' << c.tau2 << ',' << c.tau_plus2 << ',' << c.tau_minus2
               << ',' << c.i0 << ',' << c.i1 << ',' << c.i2 << ',' << c.rho2 << ',' << c.psi << ',' << c.d << ','
               << c.b2d << ',' << c.phi << '\n';
        }
    return 0;
}

// -------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0;
    bool dry_run = false;
};

std::string fmt_seconds(double secs) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << secs;
    return os.str();
}

int cmd_simulate(const SimulateArgs& a, const std::string& argv_line) {
    std::ifstream in(a.config);
    usage_check(static_cast<bool>(in), "simulate: cannot read config " + a.config);
    SimulationPlan plan = parse_plan(in);
    if (a.seed_set) plan.seed = a.seed;
    const auto cells = expand(plan);

    const json resolved = plan_to_json(plan);
    if (a.dry_run) {
        json echo = {{"config", resolved}, {"cells", json::array()}};
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& c = cells[i];
            const auto r = resolve_ranges(c);
            echo["cells"].push_back({{"index", i}, {"B", c.B}, {"L", c.L}, {"alpha0", c.model.alpha0()},
                                     {"seed", c.seed}, {"J_L", r.J_L}, {"J1", r.J1}, {"l1", r.l1}});
        }
        std::cout << echo.dump(2) << '\n';
        return 0;
    }
    usage_check(!a.out.empty(), "simulate: --out is required unless --dry-run is given");
    fs::create_directories(a.out);
    const fs::path dir(a.out);

    json manifest = {{"program", "nwhittle"},
                     {"version", NWHITTLE_VERSION},
                     {"command", argv_line},
                     {"config_path", a.config},
                     {"config", resolved},
                     {"seed", plan.seed},
                     {"threads", a.threads},
                     {"cells", json::array()}};

    auto summary = open_out(dir / "summary.csv");
    write_summary_header(summary);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const auto t0 = std::chrono::steady_clock::now();
        const auto records = run_experiment(c, a.threads);
        const auto rows = summarize(records, c);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const std::string rep_name = "replications_" + std::to_string(i) + ".csv";
        auto rep = open_out(dir / rep_name);
        write_replication_csv(rep, records);
        write_summary_rows(summary, rows, c);
        summary.flush();

        const auto r = resolve_ranges(c);
        manifest["cells"].push_back({{"index", i}, {"B", c.B}, {"L", c.L}, {"alpha0", c.model.alpha0()},
                                     {"seed", c.seed}, {"J_L", r.J_L}, {"J1", r.J1}, {"l1", r.l1},
                                     {"replications_file", rep_name}, {"seconds", secs}});
        std::cerr << "cell " << i + 1 << "/" << cells.size() << " B=" << c.B << " L=" << c.L
                  << " alpha0=" << c.model.alpha0() << " done in " << fmt_seconds(secs) << "s\n";
    }
    auto mf = open_out(dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
    return 0;
}

// -------------------------------------------------------------- estimate

struct EstimateArgs {
    std::string spectrum;
    double B = 2.0;
    std::vector<double> alpha_range{2.01, 10.0};
    double opt_tol = 1e-6;
    bool narrow = false;
    double g = 0.0;
    int j1 = -1;
    std::int64_t l1 = 0;
    bool fourier = false;
};

json result_json(const EstimateResult& r) {
    return {{"alpha_hat", r.alpha_hat},
            {"g_hat", r.g_hat},
            {"objective", r.objective_at_min},
            {"score", r.score_at_min},
            {"curvature", r.curvature},
            {"range_used", {r.range_used.first, r.range_used.second}},
            {"boundary_flag", r.boundary_flag},
            {"flat_objective", r.flat_objective},
            {"g_in_range", r.g_in_range}};
}

int cmd_estimate(const EstimateArgs& a) {
    usage_check(a.B > 1.0, "estimate: B must be > 1");
    usage_check(a.alpha_range.size() == 2, "estimate: --alpha-range takes lo,hi");
    const int schedules = (a.g > 0.0) + (a.j1 >= 0) + (a.l1 > 0);
    usage_check(schedules <= 1, "estimate: give at most one of --g, --j1, --l1");

    EstimatorConfig cfg;
    cfg.alpha_range = {a.alpha_range[0], a.alpha_range[1]};
    cfg.opt_tol = a.opt_tol;
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(std::string("estimate: ") + e.what());
    }

    std::ifstream in(a.spectrum);
    usage_check(static_cast<bool>(in), "estimate: cannot read spectrum " + a.spectrum);
    const auto spec = read_spectrum_csv(in);

    const auto bands = BandDecomposition::up_to_multipole(Window(a.B), spec.L, spec.l_min);
    const auto powers = band_powers(spec, bands);
    const auto full = minimize_profile(powers, bands, cfg);
    const int J_L = bands.j_max();
    const double L = static_cast<double>(spec.L);

    json out = {{"B", a.B}, {"l_min", spec.l_min}, {"L", spec.L}, {"J_L", J_L}};
    out["needlet_full"] = result_json(full);
    try {
        const auto c = variance_constants(a.B, full.alpha_hat);
        out["needlet_full"]["predicted_sd"] = std::sqrt(c.b2d) / L;
    } catch (const std::exception&) {
        out["needlet_full"]["predicted_sd"] = nullptr;
    }

    if (a.narrow) {
        int J1;
        if (a.j1 >= 0) {
            J1 = a.j1;
        } else if (a.l1 > 0) {
            usage_check(a.l1 > spec.l_min && a.l1 < spec.L, "estimate: --l1 must lie inside the observed range");
            J1 = J_L - static_cast<int>(std::lround(std::log(L / static_cast<double>(a.l1)) / std::log(a.B)));
        } else {
            J1 = narrow_band_range(J_L, a.B, a.g > 0.0 ? a.g : inverse_cube_schedule(J_L));
        }
        usage_check(J1 >= bands.j_min() && J1 < J_L, "estimate: narrow band needs j_min <= J1 < J_L");
        const auto nb = estimate_narrow_band(powers, bands, J1, cfg);
        out["needlet_narrow"] = result_json(nb);
        const double g = 1.0 - std::pow(a.B, J1 - J_L);
        try {
            const auto c = variance_constants(a.B, nb.alpha_hat);
            out["needlet_narrow"]["predicted_sd"] = std::sqrt(c.rho2 / (c.phi * g * std::pow(a.B, 2.0 * J_L)));
        } catch (const std::exception&) {
            out["needlet_narrow"]["predicted_sd"] = nullptr;
        }
    }
    if (a.fourier) {
        const auto f = fourier_whittle_estimate(spec, cfg);
        out["fourier_full"] = result_json(f);
        out["fourier_full"]["predicted_sd"] = std::sqrt(8.0) / L;
    }
    std::cout << std::setprecision(17) << out.dump(2) << '\n';
    return 0;
}

// --------------------------------------------------------- dump-spectrum

struct DumpArgs {
    std::string form = "pure";
    double alpha0 = 3.0;
    double G0 = 1.0;
    double kappa = 0.0;
    std::vector<double> alpha_range{2.01, 10.0};
    std::int64_t L = 1024;
    std::int64_t l_min = 1;
    std::uint64_t seed = 1;
    std::uint64_t replication = 0;
    bool noise_free = false;
    std::string out;
};

int cmd_dump(const DumpArgs& a) {
    usage_check(a.alpha_range.size() == 2, "dump-spectrum: --alpha-range takes lo,hi");
    usage_check(a.L > a.l_min && a.l_min >= 1, "dump-spectrum: need 1 <= l_min < L");
    SpectrumForm form;
    try {
        form = spectrum_form_from_string(a.form);
    } catch (const std::exception& e) {
        throw UsageError(std::string("dump-spectrum: ") + e.what());
    }
    usage_check(form != SpectrumForm::Rational, "dump-spectrum: rational models need a config; use pure or kappa");
    const ParameterRange range{a.alpha_range[0], a.alpha_range[1]};
    std::optional<SpectrumModel> model;
    try {
        model = form == SpectrumForm::Pure ? SpectrumModel::pure(a.alpha0, a.G0, range)
                                           : SpectrumModel::kappa(a.alpha0, a.G0, a.kappa, range);
    } catch (const InvalidArgument& e) {
        throw UsageError(std::string("dump-spectrum: ") + e.what());
    }
    const auto spec = a.noise_free ? expected_spectrum(*model, a.L, a.l_min)
                                   : sample_empirical_spectrum(*model, a.L, a.seed, a.replication, a.l_min);
    std::ofstream file;
    if (!a.out.empty()) file = open_out(a.out);
    std::ostream& os = a.out.empty() ? std::cout : file;
    os << "# form=" << a.form << " alpha0=" << a.alpha0 << " G0=" << a.G0 << " kappa=" << a.kappa
       << " seed=" << a.seed << " replication=" << a.replication << " noise_free=" << (a.noise_free ? 1 : 0) << '\n';
    write_spectrum_csv(os, spec, &*model);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Needlet-Whittle estimation of spherical spectral parameters"};
    app.set_version_flag("--version", std::string(NWHITTLE_VERSION));
    app.require_subcommand(1);

    Table1Args t1;
    auto* table1 = app.add_subcommand("table1", "Deterministic asymptotic constants over a (B, alpha0) grid");
    std::string b_list, a_list;
    auto* b_opt = table1->add_option("--B", b_list, "Needlet bases, comma separated (default 2^(1/8),2^(1/4),2^(1/2),2)")
                      ->expected(0, 1);
    auto* a_opt = table1->add_option("--alpha0", a_list, "Spectral indices, comma separated (default 2,3,4)")->expected(0, 1);
    table1->add_option("--quad-tol", t1.quad_tol, "Quadrature tolerance");
    table1->add_option("--out", t1.out, "Output file (default stdout)");
    table1->add_flag("--pretty", t1.pretty, "Rounded human-readable table instead of CSV");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a JSON config");
    simulate->add_option("--config", sim.config, "Experiment config (JSON)")->required();
    simulate->add_option("--out", sim.out, "Output directory");
    auto* seed_opt = simulate->add_option("--seed", sim.seed, "Override the config seed");
    simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
    simulate->add_flag("--dry-run", sim.dry_run, "Print the resolved config and grid, then exit");

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Estimate (alpha, G) from a spectrum CSV (l, cl_hat)");
    estimate->add_option("--spectrum", est.spectrum, "Spectrum CSV")->required();
    estimate->add_option("--B", est.B, "Needlet base");
    estimate->add_option("--alpha-range", est.alpha_range, "Parameter interval lo,hi")->delimiter(',');
    estimate->add_option("--opt-tol", est.opt_tol, "Absolute tolerance on alpha");
    estimate->add_flag("--narrow", est.narrow, "Also run the narrow-band estimator");
    estimate->add_option("--g", est.g, "Narrow band: constant g(J_L) (default J_L^-3)");
    estimate->add_option("--j1", est.j1, "Narrow band: explicit J1");
    estimate->add_option("--l1", est.l1, "Narrow band: explicit lower multipole L1");
    estimate->add_flag("--fourier", est.fourier, "Also run the Fourier baseline");

    DumpArgs dump;
    auto* dumpc = app.add_subcommand("dump-spectrum", "Write a simulated (or noise-free) spectrum CSV");
    dumpc->add_option("--form", dump.form, "pure or kappa");
    dumpc->add_option("--alpha0", dump.alpha0, "Spectral index");
    dumpc->add_option("--G0", dump.G0, "Scale");
    dumpc->add_option("--kappa", dump.kappa, "Nuisance coefficient for the kappa form");
    dumpc->add_option("--alpha-range", dump.alpha_range, "Admissible alpha interval lo,hi")->delimiter(',');
    dumpc->add_option("--L", dump.L, "Highest multipole");
    dumpc->add_option("--l-min", dump.l_min, "Lowest multipole");
    dumpc->add_option("--seed", dump.seed, "Seed");
    dumpc->add_option("--replication", dump.replication, "Replication index");
    dumpc->add_flag("--noise-free", dump.noise_free, "Write C_l itself instead of a random draw");
    dumpc->add_option("--out", dump.out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*table1) {
            if (b_opt->count() > 0) t1.B = parse_list(b_list, "--B");
            if (a_opt->count() > 0) t1.alpha0 = parse_list(a_list, "--alpha0");
            return cmd_table1(t1);
        }
        if (*simulate) {
            sim.seed_set = seed_opt->count() > 0;
            return cmd_simulate(sim, command_line(argc, argv));
        }
        if (*estimate) return cmd_estimate(est);
        if (*dumpc) return cmd_dump(dump);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
