// iclasso: fit, tune, diagnose and simulate incentive-compatible Lasso estimators.
//
// Exit codes: 0 success, 1 at least one simulation cell failed, 2 configuration error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "iclasso/iclasso.hpp"

namespace {

using namespace iclasso;

constexpr int kExitOk = 0;
constexpr int kExitCellFailure = 1;
constexpr int kExitConfig = 2;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Splices `key = value` lines from --config FILE into the argument list as
/// `--key value`. Keys already given on the command line are skipped, so
/// flags override the file. Booleans: `key = true` becomes `--key`.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::optional<std::string> path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigError("--config needs a file name");
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!path) return rest;
    if (rest.size() < 2) throw ConfigError("--config must follow a subcommand");

    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + *path);
    auto given = [&](const std::string& flag) {
        for (const auto& a : rest)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    std::vector<std::string> injected;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(*path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.rfind("--", 0) == 0) key.erase(0, 2);
        for (auto& c : key)
            if (c == '_') c = '-';
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (value == "true") {
            injected.push_back(flag);
        } else if (value == "false") {
            continue;
        } else {
            injected.push_back(flag);
            injected.push_back(value);
        }
    }
    std::vector<std::string> out{rest[0], rest[1]};
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), rest.begin() + 2, rest.end());
    return out;
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw ConfigError("cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset " + path);
    return read_dataset_csv(in);
}

struct GridOptions {
    std::vector<double> c2 = default_c2_values();
    std::optional<double> exponent;
    double lambda_prec_mult = 1.0;

    void add_to(CLI::App* app) {
        app->add_option("--c2-grid", c2, "C2 values of the tuning grid")->delimiter(',');
        app->add_option("--exponent", exponent, "grid exponent (default 1/8 Lasso, 1/12 Conservative)");
        app->add_option("--lambda-prec-mult", lambda_prec_mult, "lambda_prec as a multiple of lambda")
            ->check(CLI::PositiveNumber);
    }
    TuningGrid grid(Index p, Estimator e) const { return build_grid(p, exponent.value_or(default_exponent(e)), c2); }
};

// ---------------------------------------------------------------------------

struct SimulateCmd {
    std::vector<Index> p{100, 200, 300};
    std::vector<Index> n{100, 200, 300};
    std::vector<double> lie{2.0, 0.2};
    std::vector<std::string> estimator{"lasso", "conservative"};
    int iterations = 200;
    std::uint64_t seed = 1;
    GridOptions grid;
    std::string format = "csv";
    std::string out;
    bool paper_scale = false;
    bool freeze_lambda = false;
    unsigned threads = 0;

    void add_to(CLI::App* app) {
        app->add_option("--p", p, "numbers of covariates")->delimiter(',');
        app->add_option("--n", n, "sample sizes")->delimiter(',');
        app->add_option("--lie", lie, "constant misreport added to every attribute")->delimiter(',');
        app->add_option("--estimator", estimator, "lasso and/or conservative")->delimiter(',');
        app->add_option("--iterations", iterations, "Monte Carlo iterations per cell");
        app->add_option("--seed", seed, "master seed");
        grid.add_to(app);
        app->add_option("--format", format, "csv, json or text");
        app->add_option("--out", out, "output file (default stdout)");
        app->add_flag("--paper-scale", paper_scale, "use 1000 iterations");
        app->add_flag("--freeze-lambda", freeze_lambda, "select lambda once, on the first iteration");
        app->add_option("--threads", threads, "worker threads (0 = all cores)");
    }

    int run() const {
        ExperimentConfig cfg;
        cfg.p_values = p;
        cfg.n_values = n;
        cfg.lies = lie;
        cfg.estimators.clear();
        for (const auto& e : estimator) cfg.estimators.push_back(parse_estimator(e));
        cfg.iterations = paper_scale ? ExperimentConfig::paper_scale_iterations : iterations;
        cfg.master_seed = seed;
        cfg.c2_values = grid.c2;
        cfg.exponent = grid.exponent;
        cfg.lambda_prec_multiplier = grid.lambda_prec_mult;
        cfg.freeze_lambda = freeze_lambda;
        cfg.threads = threads;
        const TableFormat fmt = parse_format(format);
        cfg.validate();

        Output o(out);
        const ExperimentResult res = run_experiment(cfg);
        for (const auto& f : res.failures) std::cerr << "error: " << f << '\n';
        if (!res.cells.empty()) emit_table(o.stream(), res.cells, fmt);
        return res.ok() ? kExitOk : kExitCellFailure;
    }
};

struct FitCmd {
    std::string data;
    std::string estimator = "lasso";
    std::optional<double> lambda;
    GridOptions grid;
    bool standardize = false;
    std::string format = "json";
    std::string out;

    void add_to(CLI::App* app) {
        app->add_option("--data", data, "dataset CSV (y,x1,...,xp)")->required();
        app->add_option("--estimator", estimator, "lasso or conservative");
        app->add_option("--lambda", lambda, "fixed lambda (default: GIC over the grid)");
        grid.add_to(app);
        app->add_flag("--standardize", standardize, "scale columns to unit mean square before fitting");
        app->add_option("--format", format, "json or text");
        app->add_option("--out", out, "output file (default stdout)");
    }

    int run() const {
        if (format != "json" && format != "text") throw ConfigError("fit supports --format json or text");
        const Estimator est = parse_estimator(estimator);
        const Dataset ds = load_dataset(data);
        SolverSettings solver;
        solver.standardize = standardize;

        double lam = 0.0;
        if (lambda) {
            lam = *lambda;
        } else {
            TuningSettings ts;
            ts.solver = solver;
            ts.lambda_prec_multiplier = grid.lambda_prec_mult;
            const GicSelection sel = gic_select(ds.X, ds.y, grid.grid(ds.p(), est), est, ts);
            for (const auto& w : sel.warnings) std::cerr << "warning: " << w << '\n';
            lam = sel.lambda_star;
        }

        nlohmann::json report{{"estimator", std::string(to_string(est))}, {"n", ds.n()}, {"p", ds.p()},
                              {"lambda_source", lambda ? "fixed" : "gic"}};
        Fit fit;
        if (est == Estimator::lasso) {
            fit = fit_lasso(LassoProblem{ds.X, ds.y, lam}, std::nullopt, solver);
        } else {
            const ConservativeFit cf = fit_conservative(ds.X, ds.y, lam, lambda_prec_default(lam, grid.lambda_prec_mult), solver);
            report["first_step"] = to_json(cf.first_step);
            report["lambda_prec"] = cf.weights.lambda_prec;
            report["weights"] = std::vector<double>(cf.weights.w.data(), cf.weights.w.data() + cf.weights.w.size());
            fit = cf.second_step;
        }
        report["fit"] = to_json(fit);

        Output o(out);
        if (format == "json") {
            o.stream() << report.dump(2) << '\n';
        } else {
            auto& os = o.stream();
            os << "estimator      " << to_string(est) << "\nlambda         " << format_double(fit.lambda)
               << "\nobjective      " << format_double(fit.objective) << "\nsweeps         " << fit.sweeps
               << "\nconverged      " << (fit.converged ? "yes" : "no") << "\nkkt_violation  "
               << format_double(fit.kkt_violation) << "\nsupport       ";
            for (Index j : fit.support) os << " x" << (j + 1) << '=' << format_double(fit.beta_hat(j));
            os << '\n';
        }
        return fit.converged ? kExitOk : kExitCellFailure;
    }
};

struct SyntheticOptions {
    Index p = 100;
    Index n = 200;
    std::uint64_t seed = 1;
    double rho = 0.5;
    Index s0 = 5;

    void add_to(CLI::App* app, bool single_p_n = true) {
        if (single_p_n) {
            app->add_option("--p", p, "number of covariates");
            app->add_option("--n", n, "sample size");
        }
        app->add_option("--seed", seed, "seed");
        app->add_option("--rho", rho, "Toeplitz correlation base");
        app->add_option("--s0", s0, "number of nonzero coefficients");
    }
    DgpConfig config() const {
        DgpConfig c;
        c.p = p;
        c.n = n;
        c.seed = seed;
        c.rho = rho;
        c.s0 = s0;
        return c;
    }
};

struct TuneCmd {
    std::string data;
    SyntheticOptions synth;
    std::string estimator = "lasso";
    GridOptions grid;
    std::string out;

    void add_to(CLI::App* app) {
        app->add_option("--data", data, "dataset CSV; omitted: draw a synthetic dataset");
        synth.add_to(app);
        app->add_option("--estimator", estimator, "lasso or conservative");
        grid.add_to(app);
        app->add_option("--out", out, "output file (default stdout)");
    }

    int run() const {
        const Estimator est = parse_estimator(estimator);
        const Dataset ds = data.empty() ? sample_dataset(synth.config()) : load_dataset(data);
        TuningSettings ts;
        ts.lambda_prec_multiplier = grid.lambda_prec_mult;
        const GicSelection sel = gic_select(ds.X, ds.y, grid.grid(ds.p(), est), est, ts);
        for (const auto& w : sel.warnings) std::cerr << "warning: " << w << '\n';
        Output o(out);
        write_gic_csv(o.stream(), sel);
        return kExitOk;
    }
};

struct DiagnoseCmd {
    SyntheticOptions synth;
    std::string estimator = "lasso";
    double lie = 2.0;
    std::optional<double> lambda;
    GridOptions grid;
    int reps = 500;
    int moment_reps = 100;
    int cone_samples = 1000;
    double s1 = 1.0;
    unsigned threads = 0;
    std::string out;

    void add_to(CLI::App* app) {
        synth.add_to(app);
        app->add_option("--estimator", estimator, "lasso or conservative");
        app->add_option("--lie", lie, "constant misreport of the new user");
        app->add_option("--lambda", lambda, "tuning parameter (default: smallest grid value)");
        grid.add_to(app);
        app->add_option("--reps", reps, "replications for the exception probability");
        app->add_option("--moment-reps", moment_reps, "replications for the moment bounds (>= 30)");
        app->add_option("--cone-samples", cone_samples, "sampled cone directions");
        app->add_option("--s1", s1, "precision-matrix row-sum rate used by the conservative bound");
        app->add_option("--threads", threads, "worker threads (0 = all cores)");
        app->add_option("--out", out, "output file (default stdout)");
    }

    int run() const {
        const Estimator est = parse_estimator(estimator);
        const DgpConfig cfg = synth.config();
        cfg.validate();
        const double lam = lambda ? *lambda : grid.grid(cfg.p, est).lambdas.front();
        const std::string key = describe(cfg) + ";estimator=" + std::string(to_string(est)) +
                                ";lambda=" + format_double(lam) + ";lie=" + format_double(lie);
        const Matrix sigma = toeplitz_sigma(cfg.p, cfg.rho);
        const Dataset ds = sample_dataset(cfg);
        const NewUser user = sample_new_user(cfg.p, 3, lie, derive_seed(cfg.seed, {stream::new_user}));

        MonteCarloSettings mc;
        mc.events.cone_samples = cone_samples;
        mc.lambda_prec_multiplier = grid.lambda_prec_mult;
        mc.threads = threads;

        nlohmann::json records = nlohmann::json::array();
        const MaxStats ms = compute_max_stats(ds, user, sigma);
        records.push_back(diagnostics_record("compute_max_stats", key, cfg.seed, to_json(ms)));
        records.push_back(diagnostics_record("check_events", key, cfg.seed,
                                             to_json(check_events(ds, sigma, lam, derive_seed(cfg.seed, {stream::cone}), mc.events))));
        const double pfc = estimate_exception_probability(cfg, lam, reps, cfg.seed, mc);
        records.push_back(diagnostics_record("estimate_exception_probability", key, cfg.seed,
                                             {{"p_fc", pfc}, {"reps", reps}, {"lambda", lam}}));
        for (int k : {1, 2})
            records.push_back(diagnostics_record("estimate_moment_bounds", key, cfg.seed,
                                                 to_json(estimate_moment_bounds(cfg, est, lam, k, moment_reps, cfg.seed, mc))));
        const double s0 = static_cast<double>(cfg.s0);
        records.push_back(diagnostics_record(
            "check_ic_condition", key, cfg.seed,
            {{"three_halves", check_ic_condition(s0, cfg.n, cfg.p, ms.m3, ms.m4, SparsityExponent::three_halves)},
             {"two", check_ic_condition(s0, cfg.n, cfg.p, ms.m3, ms.m4, SparsityExponent::two)}}));
        const BoundRule rule = est == Estimator::lasso ? BoundRule::lasso : BoundRule::conservative;
        records.push_back(diagnostics_record("ic_lower_bound_ok", key, cfg.seed,
                                             {{"lambda", lam},
                                              {"bound", ic_lower_bound(pfc, s0, s1, rule)},
                                              {"ok", ic_lower_bound_ok(lam, pfc, s0, s1, rule)}}));
        Output o(out);
        o.stream() << records.dump(2) << '\n';
        return kExitOk;
    }
};

struct GenerateCmd {
    SyntheticOptions synth;
    std::string out;

    void add_to(CLI::App* app) {
        synth.add_to(app);
        app->add_option("--out", out, "output file (default stdout)");
    }
    int run() const {
        const Dataset ds = sample_dataset(synth.config());
        Output o(out);
        write_dataset_csv(o.stream(), ds.X, ds.y);
        return kExitOk;
    }
};

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    try {
        args = expand_config(std::move(args));
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitConfig;
    }

    CLI::App app{"Incentive-compatible Lasso and Conservative Lasso: fitting, tuning, diagnostics and simulation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    SimulateCmd simulate;
    FitCmd fit;
    TuneCmd tune;
    DiagnoseCmd diagnose;
    GenerateCmd generate;
    auto* sim_app = app.add_subcommand("simulate", "run the Monte Carlo incentive-compatibility tables");
    auto* fit_app = app.add_subcommand("fit", "fit one estimator to a CSV dataset");
    auto* tune_app = app.add_subcommand("tune", "print the tuning grid with GIC scores");
    auto* diag_app = app.add_subcommand("diagnose", "event, exception-probability and moment diagnostics");
    auto* gen_app = app.add_subcommand("generate", "write a synthetic dataset as CSV");
    simulate.add_to(sim_app);
    fit.add_to(fit_app);
    tune.add_to(tune_app);
    diagnose.add_to(diag_app);
    generate.add_to(gen_app);
    for (auto* sub : {sim_app, fit_app, tune_app, diag_app, gen_app})
        sub->add_option("--config", "flat key = value file mirroring the flags (flags win)");

    std::vector<const char*> cargv;
    for (const auto& a : args) cargv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*sim_app) return simulate.run();
        if (*fit_app) return fit.run();
        if (*tune_app) return tune.run();
        if (*diag_app) return diagnose.run();
        if (*gen_app) return generate.run();
    } catch (const ConfigError& ex) {
        std::cerr << "configuration error: " << ex.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitCellFailure;
    }
    return kExitOk;
}
