#pragma once

#include "regbal/dataset.hpp"
#include "regbal/estimators.hpp"
#include "regbal/features.hpp"
#include "regbal/functional.hpp"
#include "regbal/outcome.hpp"
#include "regbal/riesz.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace regbal {

/// Synthetic design: Z ~ N(0, I_p), D ~ Bernoulli(e0(Z)),
/// Y = mu0(Z) + D tau(Z) + eps with mu0 = psi . beta0, tau = psi . beta_tau.
struct DgpSpec {
    Eigen::Index n = 1200;
    Eigen::Index p = 3;
    Eigen::Index features = 80;
    double noise_sd = 0.05;
    double bandwidth = 1.0;
    FeatureScale scale = FeatureScale::Unit;
    std::uint64_t design_seed = 7;  // feature map and beta0, beta_tau
    bool homogeneous_effect = false;  // beta_tau = 0

    void validate() const;
};

/// The parts of a DGP held fixed across replications.
struct Design {
    DgpSpec spec;
    std::shared_ptr<const FeatureMap> map;  // with intercept, for fitting
    Eigen::VectorXd beta0;
    Eigen::VectorXd beta_tau;
};

Design make_design(const DgpSpec& spec);

/// expit(0.5 z1 - 0.4 z2 + 0.2 sin z3); later coordinates do not enter.
double propensity(const Eigen::RowVectorXd& z);

struct SimulatedData {
    Dataset data;  // oracle mu0, mu1 = mu0 + tau, e0
    double sample_ate = 0.0;
};

SimulatedData simulate_dataset(const Design& design, std::uint64_t rep_seed);

/// One configuration cell of a study. folds == 1 means no cross-fitting.
struct CellSpec {
    BalancingScheme scheme = BalancingScheme::Regressor;
    RieszLoss loss = RieszLoss::Squared;
    double lambda = 0.01;
    int folds = 1;

    std::string label() const;
};

/// Cross product in the order: folds, loss, lambda, scheme (innermost).
std::vector<CellSpec> make_cells(const std::vector<BalancingScheme>& schemes,
                                 const std::vector<RieszLoss>& losses,
                                 const std::vector<double>& lambdas,
                                 const std::vector<int>& fold_modes);

/// Settings shared by the simulation and semi-synthetic studies.
struct FitSettings {
    Functional functional = Functional::Ate;
    OutcomeConfig outcome;
    double tol = 1e-9;
    int max_iter = 500;
    /// Independent diagnostic features; empty means the fitting map's features.
    std::optional<std::uint64_t> diagnostic_seed;
    int jobs = 1;
};

struct ExperimentConfig {
    DgpSpec dgp;
    int reps = 100;
    std::uint64_t seed = 7;  // replication r uses derive_seed(seed, r)
    std::vector<CellSpec> cells;
    FitSettings fit;

    void validate() const;
};

struct ReplicationRow {
    int rep = 0;
    std::size_t cell = 0;
    double target = 0.0;
    EstimateResult result;
};

struct CellSummary {
    CellSpec cell;
    int reps = 0;
    double rmse_ra = 0.0;
    double rmse_rw = 0.0;
    double rmse_arw = 0.0;
    double bias_ra = 0.0;
    double bias_rw = 0.0;
    double bias_arw = 0.0;
    double cov_imbalance = 0.0;  // mean covariate RMS gap
    double reg_imbalance = 0.0;  // mean regressor RMS gap
    std::optional<double> mean_abs_ne;
};

struct AggregateReport {
    std::vector<CellSummary> cells;
    std::vector<ReplicationRow> rows;  // ordered by (rep, cell)
};

/// Summaries from per-replication rows; rows may be in any order.
AggregateReport aggregate(const std::vector<CellSpec>& cells, std::vector<ReplicationRow> rows);

/// Estimates every cell on one dataset. `target` is recorded on each row.
/// Cross-fit cells use folds drawn from `fold_seed`; one outcome model per
/// fold layout is shared by all cells.
std::vector<ReplicationRow> run_cells(const Dataset& data, double target, int rep,
                                      std::shared_ptr<const FeatureMap> map,
                                      const FeatureMap& diagnostic_map,
                                      const std::vector<CellSpec>& cells,
                                      const FitSettings& fit, std::uint64_t fold_seed);

AggregateReport run_monte_carlo(const ExperimentConfig& config);

struct SemiSyntheticReplication {
    int rep = 0;
    Dataset dataset;  // oracle mu0, mu1
    double true_ate = 0.0;
};

struct SemiSyntheticConfig {
    Eigen::Index features = 80;
    double bandwidth = 2.0;
    FeatureScale scale = FeatureScale::Unit;
    std::uint64_t seed = 7;  // feature map and folds
    std::vector<CellSpec> cells;
    FitSettings fit;
};

AggregateReport run_semisynthetic(const std::vector<SemiSyntheticReplication>& replications,
                                  const SemiSyntheticConfig& config);

}  // namespace regbal
