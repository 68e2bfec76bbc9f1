#include "regbal/experiments.hpp"

#include "regbal/error.hpp"
#include "regbal/parallel.hpp"
#include "regbal/summation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace regbal {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double oracle_target(Functional functional, const Dataset& data) {
    const Eigen::VectorXd m = m_of_function(functional, data, data.gamma0());
    return compensated_mean(m.size(), [&](Eigen::Index i) { return m[i]; });
}

RieszConfig riesz_config_for(const CellSpec& cell, const FitSettings& fit) {
    RieszConfig rc;
    rc.loss = cell.loss;
    rc.lambda = cell.lambda;
    rc.scheme = cell.scheme;
    rc.solver = cell.loss == RieszLoss::Squared ? RieszSolver::ClosedForm
                                                : RieszSolver::ConvexIterative;
    rc.tol = fit.tol;
    rc.max_iter = fit.max_iter;
    return rc;
}

void validate_cells(const std::vector<CellSpec>& cells, const FitSettings& fit) {
    if (cells.empty()) throw Error("no experiment cells configured");
    for (const CellSpec& c : cells) {
        riesz_config_for(c, fit).validate();
        if (c.folds < 1) throw Error("fold count must be at least 1");
    }
    if (!(fit.outcome.ridge >= 0.0)) throw Error("outcome ridge must be nonnegative");
    if (fit.jobs < 1) throw Error("jobs must be at least 1");
}

double rmse(const std::vector<double>& err) {
    const auto n = static_cast<std::ptrdiff_t>(err.size());
    return std::sqrt(compensated_mean(n, [&](std::ptrdiff_t i) { return err[i] * err[i]; }));
}

double mean(const std::vector<double>& v) {
    const auto n = static_cast<std::ptrdiff_t>(v.size());
    return compensated_mean(n, [&](std::ptrdiff_t i) { return v[i]; });
}

}  // namespace

void DgpSpec::validate() const {
    if (n < 2) throw Error("sample size must be at least 2");
    if (p < 3) throw Error("the propensity model needs p >= 3");
    if (features < 1) throw Error("feature count must be at least 1");
    if (!(noise_sd >= 0.0)) throw Error("noise sd must be nonnegative");
    if (!(bandwidth > 0.0)) throw Error("bandwidth must be positive");
}

Design make_design(const DgpSpec& spec) {
    spec.validate();
    Design d;
    d.spec = spec;
    d.map = std::make_shared<const FeatureMap>(make_feature_map(
        spec.p, spec.features, spec.bandwidth, derive_seed(spec.design_seed, 0), true,
        spec.scale));

    std::mt19937_64 rng(derive_seed(spec.design_seed, 1));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(double(spec.features)));
    d.beta0.resize(spec.features);
    d.beta_tau.resize(spec.features);
    for (Eigen::Index k = 0; k < spec.features; ++k) d.beta0[k] = normal(rng);
    for (Eigen::Index k = 0; k < spec.features; ++k) d.beta_tau[k] = normal(rng);
    if (spec.homogeneous_effect) d.beta_tau.setZero();
    return d;
}

double propensity(const Eigen::RowVectorXd& z) {
    if (z.size() < 3) throw Error("the propensity model needs p >= 3");
    return expit(0.5 * z[0] - 0.4 * z[1] + 0.2 * std::sin(z[2]));
}

SimulatedData simulate_dataset(const Design& design, std::uint64_t rep_seed) {
    const DgpSpec& s = design.spec;
    std::mt19937_64 rng(rep_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    Eigen::MatrixXd z(s.n, s.p);
    for (Eigen::Index i = 0; i < s.n; ++i) {
        for (Eigen::Index j = 0; j < s.p; ++j) z(i, j) = normal(rng);
    }
    Eigen::VectorXd e0(s.n), d(s.n);
    for (Eigen::Index i = 0; i < s.n; ++i) {
        e0[i] = propensity(z.row(i));
        d[i] = uniform(rng) < e0[i] ? 1.0 : 0.0;
    }
    const Eigen::MatrixXd psi = design.map->features(z);
    Eigen::VectorXd mu0 = psi * design.beta0;
    Eigen::VectorXd tau = psi * design.beta_tau;
    Eigen::VectorXd y(s.n);
    for (Eigen::Index i = 0; i < s.n; ++i) {
        y[i] = mu0[i] + d[i] * tau[i] + s.noise_sd * normal(rng);
    }
    const double ate = compensated_mean(s.n, [&](Eigen::Index i) { return tau[i]; });
    Eigen::VectorXd mu1 = mu0 + tau;
    return {Dataset(std::move(d), std::move(z), std::move(y),
                    Oracle{std::move(mu0), std::move(mu1), std::move(e0)}),
            ate};
}

std::string CellSpec::label() const {
    std::ostringstream os;
    os << "scheme=" << to_string(scheme) << " loss=" << to_string(loss) << " lambda=" << lambda
       << " crossfit=" << folds;
    return os.str();
}

std::vector<CellSpec> make_cells(const std::vector<BalancingScheme>& schemes,
                                 const std::vector<RieszLoss>& losses,
                                 const std::vector<double>& lambdas,
                                 const std::vector<int>& fold_modes) {
    std::vector<CellSpec> cells;
    for (int k : fold_modes) {
        for (RieszLoss loss : losses) {
            for (double lambda : lambdas) {
                for (BalancingScheme s : schemes) cells.push_back({s, loss, lambda, k});
            }
        }
    }
    return cells;
}

void ExperimentConfig::validate() const {
    dgp.validate();
    if (reps < 1) throw Error("reps must be at least 1");
    validate_cells(cells, fit);
}

std::vector<ReplicationRow> run_cells(const Dataset& data, double target, int rep,
                                      std::shared_ptr<const FeatureMap> map,
                                      const FeatureMap& diagnostic_map,
                                      const std::vector<CellSpec>& cells,
                                      const FitSettings& fit, std::uint64_t fold_seed) {
    std::optional<ArmValues> full_gamma;
    std::map<int, std::vector<int>> layouts;
    std::vector<ReplicationRow> rows;
    rows.reserve(cells.size());

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const CellSpec& cell = cells[c];
        ReplicationRow row;
        row.rep = rep;
        row.cell = c;
        row.target = target;
        try {
            const RieszConfig rc = riesz_config_for(cell, fit);
            if (cell.folds == 1) {
                if (!full_gamma) full_gamma = fit_outcome(data, map, fit.outcome).predict_arms(data);
                const RieszFit riesz = fit_riesz(data, fit.functional, map, rc);
                row.result = estimate_from_values(fit.functional, data, riesz.evaluate(data),
                                                  *full_gamma, diagnostic_map);
            } else {
                auto it = layouts.find(cell.folds);
                if (it == layouts.end()) {
                    it = layouts.emplace(cell.folds, assign_folds(data, cell.folds, fold_seed))
                             .first;
                }
                const FoldTrainer trainer = [&](const Dataset& train, const Dataset& eval) {
                    const RieszFit riesz = fit_riesz(train, fit.functional, map, rc);
                    const OutcomeFit outcome = fit_outcome(train, map, fit.outcome);
                    return FoldNuisance{riesz.evaluate(eval), outcome.predict_arms(eval)};
                };
                row.result = estimate_on_folds(data, fit.functional, it->second, cell.folds,
                                               trainer, diagnostic_map, 1);
            }
        } catch (const std::exception& e) {
            throw Error("replication " + std::to_string(rep) + ", cell " + cell.label() + ": " +
                        e.what());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

AggregateReport aggregate(const std::vector<CellSpec>& cells, std::vector<ReplicationRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.rep != b.rep ? a.rep < b.rep : a.cell < b.cell;
    });

    AggregateReport report;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<double> e_ra, e_rw, e_arw, cov, reg, ne;
        bool all_ne = true;
        for (const ReplicationRow& r : rows) {
            if (r.cell != c) continue;
            e_ra.push_back(r.result.theta_ra - r.target);
            e_rw.push_back(r.result.theta_rw - r.target);
            e_arw.push_back(r.result.theta_arw - r.target);
            cov.push_back(r.result.imbalance.covariate_rms);
            reg.push_back(r.result.imbalance.regressor_rms);
            if (r.result.neyman) {
                ne.push_back(std::abs(r.result.neyman->ne));
            } else {
                all_ne = false;
            }
        }
        CellSummary s;
        s.cell = cells[c];
        s.reps = static_cast<int>(e_ra.size());
        if (s.reps > 0) {
            s.rmse_ra = rmse(e_ra);
            s.rmse_rw = rmse(e_rw);
            s.rmse_arw = rmse(e_arw);
            s.bias_ra = mean(e_ra);
            s.bias_rw = mean(e_rw);
            s.bias_arw = mean(e_arw);
            s.cov_imbalance = mean(cov);
            s.reg_imbalance = mean(reg);
            if (all_ne) s.mean_abs_ne = mean(ne);
        }
        report.cells.push_back(s);
    }
    report.rows = std::move(rows);
    return report;
}

AggregateReport run_monte_carlo(const ExperimentConfig& config) {
    config.validate();
    const Design design = make_design(config.dgp);
    const FeatureMap diagnostic =
        config.fit.diagnostic_seed
            ? make_feature_map(config.dgp.p, config.dgp.features, config.dgp.bandwidth,
                               *config.fit.diagnostic_seed, false, config.dgp.scale)
            : design.map->with_intercept(false);

    std::vector<std::vector<ReplicationRow>> per_rep(static_cast<std::size_t>(config.reps));
    parallel_for(per_rep.size(), config.fit.jobs, [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(config.seed, r);
        const SimulatedData sim = simulate_dataset(design, rep_seed);
        const double target = config.fit.functional == Functional::Ate
                                  ? sim.sample_ate
                                  : oracle_target(config.fit.functional, sim.data);
        per_rep[r] = run_cells(sim.data, target, static_cast<int>(r), design.map, diagnostic,
                               config.cells, config.fit, derive_seed(rep_seed, 1));
    });

    std::vector<ReplicationRow> rows;
    for (auto& v : per_rep) {
        for (auto& row : v) rows.push_back(std::move(row));
    }
    return aggregate(config.cells, std::move(rows));
}

AggregateReport run_semisynthetic(const std::vector<SemiSyntheticReplication>& replications,
                                  const SemiSyntheticConfig& config) {
    validate_cells(config.cells, config.fit);
    if (replications.empty()) throw Error("no replications to analyse");
    const Eigen::Index p = replications.front().dataset.p();
    for (const auto& r : replications) {
        if (r.dataset.p() != p) throw Error("replications differ in covariate dimension");
    }

    const auto map = std::make_shared<const FeatureMap>(
        make_feature_map(p, config.features, config.bandwidth, config.seed, true, config.scale));
    const FeatureMap diagnostic =
        config.fit.diagnostic_seed
            ? make_feature_map(p, config.features, config.bandwidth, *config.fit.diagnostic_seed,
                               false, config.scale)
            : map->with_intercept(false);

    std::vector<std::vector<ReplicationRow>> per_rep(replications.size());
    parallel_for(per_rep.size(), config.fit.jobs, [&](std::size_t r) {
        const SemiSyntheticReplication& rep = replications[r];
        const double target = config.fit.functional == Functional::Ate
                                  ? rep.true_ate
                                  : oracle_target(config.fit.functional, rep.dataset);
        per_rep[r] = run_cells(rep.dataset, target, rep.rep, map, diagnostic, config.cells,
                               config.fit, derive_seed(config.seed, static_cast<std::uint64_t>(rep.rep)));
    });

    std::vector<ReplicationRow> rows;
    for (auto& v : per_rep) {
        for (auto& row : v) rows.push_back(std::move(row));
    }
    return aggregate(config.cells, std::move(rows));
}

}  // namespace regbal
