#include "cli.hpp"

#include "regbal/data_io.hpp"
#include "regbal/error.hpp"
#include "regbal/estimators.hpp"
#include "regbal/experiments.hpp"
#include "regbal/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace regbal::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FitFlags {
    std::vector<std::string> losses{"sq"};
    std::string scheme = "both";
    std::vector<double> lambdas{0.01};
    int crossfit = 0;
    std::uint64_t seed = 7;
    int jobs = 0;
    long features = 80;
    double bandwidth = 1.0;
    std::string feature_scale = "unit";
    double outcome_ridge = 1e-3;
    std::string effect = "constant";
    std::uint64_t diag_seed = 0;
    CLI::Option* diag_seed_opt = nullptr;
    std::string functional = "ate";
    double tol = 1e-9;
    int max_iter = 500;
};

void add_fit_flags(CLI::App& sub, FitFlags& f) {
    sub.add_option("--loss", f.losses, "Riesz loss: sq, ukl or bp (repeatable)");
    sub.add_option("--scheme", f.scheme, "covariate, regressor or both");
    sub.add_option("--lambda", f.lambdas, "Riesz ridge weight (repeatable)");
    sub.add_option("--crossfit", f.crossfit,
                   "Also run K-fold cross-fitting with this K (0 = off)");
    sub.add_option("--seed", f.seed, "Master seed");
    sub.add_option("--jobs", f.jobs, "Worker threads (0 = hardware); never changes output");
    sub.add_option("--features", f.features, "Random Fourier features");
    sub.add_option("--bandwidth", f.bandwidth, "Gaussian kernel scale");
    sub.add_option("--feature-scale", f.feature_scale,
                   "Feature amplitude: unit (sqrt 2) or kernel (sqrt(2/m))");
    sub.add_option("--outcome-ridge", f.outcome_ridge, "Outcome regression ridge");
    sub.add_option("--effect-model", f.effect, "Outcome model: constant or interacted");
    f.diag_seed_opt = sub.add_option("--diag-seed", f.diag_seed,
                                     "Seed of an independent diagnostic feature map");
    sub.add_option("--functional", f.functional, "ate or att");
    sub.add_option("--tol", f.tol, "Gradient tolerance of iterative Riesz fits");
    sub.add_option("--max-iter", f.max_iter, "Iteration cap of iterative Riesz fits");
}

template <class F>
auto as_usage(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

std::vector<BalancingScheme> schemes_of(const std::string& s) {
    if (s == "both") return {BalancingScheme::Covariate, BalancingScheme::Regressor};
    return {as_usage([&] { return parse_scheme(s); })};
}

FeatureScale scale_of(const std::string& s) {
    if (s == "unit") return FeatureScale::Unit;
    if (s == "kernel") return FeatureScale::Kernel;
    throw UsageError("unknown feature scale '" + s + "'");
}

int jobs_of(const FitFlags& f) {
    if (f.jobs < 0) throw UsageError("jobs must be nonnegative");
    if (f.jobs > 0) return f.jobs;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<CellSpec> cells_of(const FitFlags& f) {
    std::vector<RieszLoss> losses;
    for (const auto& l : f.losses) losses.push_back(as_usage([&] { return parse_loss(l); }));
    if (losses.empty()) throw UsageError("at least one --loss is required");
    if (f.lambdas.empty()) throw UsageError("at least one --lambda is required");
    for (double l : f.lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw UsageError("lambda must be nonnegative");
    }
    if (f.crossfit == 1 || f.crossfit < 0) throw UsageError("--crossfit needs K >= 2");
    std::vector<int> modes{1};
    if (f.crossfit >= 2) modes.push_back(f.crossfit);
    return make_cells(schemes_of(f.scheme), losses, f.lambdas, modes);
}

FitSettings settings_of(const FitFlags& f) {
    FitSettings s;
    s.functional = as_usage([&] { return parse_functional(f.functional); });
    s.outcome.effect = as_usage([&] { return parse_effect_model(f.effect); });
    if (!(f.outcome_ridge >= 0.0)) throw UsageError("outcome ridge must be nonnegative");
    s.outcome.ridge = f.outcome_ridge;
    if (!(f.tol > 0.0)) throw UsageError("tolerance must be positive");
    if (f.max_iter < 1) throw UsageError("max-iter must be at least 1");
    s.tol = f.tol;
    s.max_iter = f.max_iter;
    if (f.diag_seed_opt->count() > 0) s.diagnostic_seed = f.diag_seed;
    s.jobs = jobs_of(f);
    return s;
}

void print_summary(const AggregateReport& report, std::ostream& out) {
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %-4s %-8s %-8s %-10s %-10s %-10s %-10s %-10s\n",
                  "scheme", "loss", "lambda", "crossfit", "rmse_ra", "rmse_rw", "rmse_arw",
                  "cov_imb", "reg_imb");
    out << line;
    for (const CellSummary& c : report.cells) {
        std::snprintf(line, sizeof line,
                      "%-10s %-4s %-8.6g %-8d %-10.6g %-10.6g %-10.6g %-10.6g %-10.6g\n",
                      std::string(to_string(c.cell.scheme)).c_str(),
                      std::string(to_string(c.cell.loss)).c_str(), c.cell.lambda, c.cell.folds,
                      c.rmse_ra, c.rmse_rw, c.rmse_arw, c.cov_imbalance, c.reg_imbalance);
        out << line;
    }
}

void print_value(std::ostream& out, const char* key, double v) {
    char line[128];
    std::snprintf(line, sizeof line, "%-14s %.10g\n", key, v);
    out << line;
}

struct SimulateFlags {
    FitFlags fit;
    int reps = 100;
    long n = 1200;
    double noise = 0.05;
    std::uint64_t coef_seed = 0;
    CLI::Option* coef_seed_opt = nullptr;
    bool homogeneous = false;
    std::string out;
    std::string write_data;
};

int run_simulate(const SimulateFlags& f, std::ostream& out) {
    ExperimentConfig config;
    config.reps = f.reps;
    config.seed = f.fit.seed;
    config.dgp.n = f.n;
    config.dgp.features = f.fit.features;
    config.dgp.noise_sd = f.noise;
    config.dgp.bandwidth = f.fit.bandwidth;
    config.dgp.scale = scale_of(f.fit.feature_scale);
    config.dgp.design_seed = f.coef_seed_opt->count() > 0 ? f.coef_seed : f.fit.seed;
    config.dgp.homogeneous_effect = f.homogeneous;
    config.cells = cells_of(f.fit);
    config.fit = settings_of(f.fit);
    as_usage([&] {
        config.validate();
        return 0;
    });

    const AggregateReport report = run_monte_carlo(config);
    write_report_csv(report, f.out);
    if (!f.write_data.empty()) {
        const Design design = make_design(config.dgp);
        std::vector<SemiSyntheticReplication> reps;
        for (int r = 0; r < config.reps; ++r) {
            SimulatedData sim = simulate_dataset(design, derive_seed(config.seed, r));
            reps.push_back({r, std::move(sim.data), sim.sample_ate});
        }
        write_replications_csv(reps, f.write_data);
    }
    print_summary(report, out);
    out << "wrote " << f.out << " and " << replication_path(f.out).string() << "\n";
    return 0;
}

struct SemisynthFlags {
    FitFlags fit;
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::string out;
};

int run_semisynth(const SemisynthFlags& f, std::ostream& out) {
    std::vector<std::filesystem::path> paths;
    for (const auto& p : f.train) paths.emplace_back(p);
    for (const auto& p : f.test) paths.emplace_back(p);
    if (paths.empty()) throw UsageError("give at least one --train or --test file");

    SemiSyntheticConfig config;
    if (f.fit.features < 1) throw UsageError("features must be at least 1");
    if (!(f.fit.bandwidth > 0.0)) throw UsageError("bandwidth must be positive");
    config.features = f.fit.features;
    config.bandwidth = f.fit.bandwidth;
    config.scale = scale_of(f.fit.feature_scale);
    config.seed = f.fit.seed;
    config.cells = cells_of(f.fit);
    config.fit = settings_of(f.fit);

    const auto reps = load_semisynthetic(paths, true);
    const AggregateReport report = run_semisynthetic(reps, config);
    write_report_csv(report, f.out);
    print_summary(report, out);
    out << reps.size() << " replications; wrote " << f.out << " and "
        << replication_path(f.out).string() << "\n";
    return 0;
}

struct DiagnoseFlags {
    FitFlags fit;
    std::string data;
    int rep = 0;
    CLI::Option* rep_opt = nullptr;
};

int run_diagnose(const DiagnoseFlags& f, std::ostream& out) {
    if (f.fit.losses.size() != 1) throw UsageError("diagnose takes exactly one --loss");
    if (f.fit.lambdas.size() != 1) throw UsageError("diagnose takes exactly one --lambda");
    if (f.fit.scheme == "both") throw UsageError("diagnose needs --scheme covariate or regressor");
    const std::vector<CellSpec> cells = cells_of(f.fit);
    const FitSettings settings = settings_of(f.fit);
    if (f.fit.features < 1) throw UsageError("features must be at least 1");
    if (!(f.fit.bandwidth > 0.0)) throw UsageError("bandwidth must be positive");
    const FeatureScale scale = scale_of(f.fit.feature_scale);

    const auto reps = load_semisynthetic({f.data}, false);
    const SemiSyntheticReplication* chosen = &reps.front();
    if (f.rep_opt->count() > 0) {
        chosen = nullptr;
        for (const auto& r : reps) {
            if (r.rep == f.rep) chosen = &r;
        }
        if (!chosen) throw Error("replication " + std::to_string(f.rep) + " not found");
    }
    const Dataset& data = chosen->dataset;
    const auto map = std::make_shared<const FeatureMap>(
        make_feature_map(data.p(), f.fit.features, f.fit.bandwidth, f.fit.seed, true, scale));
    const FeatureMap diagnostic =
        settings.diagnostic_seed
            ? make_feature_map(data.p(), f.fit.features, f.fit.bandwidth,
                               *settings.diagnostic_seed, false, scale)
            : map->with_intercept(false);

    const std::vector<ReplicationRow> rows =
        run_cells(data, 0.0, chosen->rep, map, diagnostic, {cells.back()}, settings,
                  derive_seed(f.fit.seed, static_cast<std::uint64_t>(chosen->rep)));
    const EstimateResult& r = rows.front().result;

    out << "rep            " << chosen->rep << "\n";
    out << "n              " << data.n() << "\n";
    out << "cell           " << cells.back().label() << "\n";
    print_value(out, "theta_ra", r.theta_ra);
    print_value(out, "theta_rw", r.theta_rw);
    print_value(out, "theta_arw", r.theta_arw);
    print_value(out, "covariate_rms", r.imbalance.covariate_rms);
    print_value(out, "covariate_max", r.imbalance.covariate_max);
    print_value(out, "regressor_rms", r.imbalance.regressor_rms);
    print_value(out, "regressor_max", r.imbalance.regressor_max);
    if (r.neyman) {
        print_value(out, "true_ate", chosen->true_ate);
        print_value(out, "ne", r.neyman->ne);
        print_value(out, "noise", r.neyman->noise);
        print_value(out, "drift", r.neyman->drift);
    }
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Riesz regression, regressor balancing and debiased estimation"};
    app.name("regbal");
    app.require_subcommand(1);

    SimulateFlags sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo study on the synthetic design");
    add_fit_flags(*simulate, sim.fit);
    simulate->add_option("--reps", sim.reps, "Replications");
    simulate->add_option("--n", sim.n, "Sample size");
    simulate->add_option("--noise", sim.noise, "Outcome noise sd");
    sim.coef_seed_opt =
        simulate->add_option("--coef-seed", sim.coef_seed,
                             "Seed of the fixed feature map and coefficients (default --seed)");
    simulate->add_flag("--homogeneous", sim.homogeneous, "Constant treatment effect (tau = 0)");
    simulate->add_option("--out", sim.out, "Summary CSV path")->required();
    simulate->add_option("--write-data", sim.write_data,
                         "Also write the simulated replications as a CSV");

    SemisynthFlags semi;
    semi.fit.bandwidth = 2.0;
    CLI::App* semisynth = app.add_subcommand("semisynth", "Semi-synthetic study from CSV files");
    add_fit_flags(*semisynth, semi.fit);
    semisynth->add_option("--train", semi.train, "Training file(s)");
    semisynth->add_option("--test", semi.test, "Test file(s)");
    semisynth->add_option("--out", semi.out, "Summary CSV path")->required();

    DiagnoseFlags diag;
    diag.fit.scheme = "regressor";
    CLI::App* diagnose = app.add_subcommand("diagnose", "Fit once and report imbalance");
    add_fit_flags(*diagnose, diag.fit);
    diagnose->add_option("--data", diag.data, "Data CSV")->required();
    diag.rep_opt = diagnose->add_option("--rep", diag.rep, "Replication to analyse");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*simulate) return run_simulate(sim, out);
        if (*semisynth) return run_semisynth(semi, out);
        return run_diagnose(diag, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace regbal::cli
