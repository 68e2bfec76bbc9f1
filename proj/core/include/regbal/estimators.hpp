#pragma once

#include "regbal/dataset.hpp"
#include "regbal/functional.hpp"
#include "regbal/outcome.hpp"
#include "regbal/riesz.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace regbal {

/// RA = mean m(W; gamma_hat), RW = mean alpha Y,
/// ARW = mean [m(W; gamma_hat) + alpha (Y - gamma_hat(X))].
struct ScoreEstimates {
    double ra = 0.0;
    double rw = 0.0;
    double arw = 0.0;
};

ScoreEstimates score_estimates(Functional functional, const Dataset& data,
                               const Eigen::VectorXd& alpha, const ArmValues& gamma_hat);

struct NeymanReport {
    double ne = 0.0;
    double noise = 0.0;
    double drift = 0.0;
};

struct EstimateResult {
    double theta_ra = 0.0;
    double theta_rw = 0.0;
    double theta_arw = 0.0;
    ImbalanceReport imbalance;
    ImbalanceGaps gaps;
    std::optional<NeymanReport> neyman;  // present when the data carry an oracle
    int fold_count = 1;                  // 1 = no cross-fitting
};

/// Estimates and diagnostics from nuisance values already evaluated on `data`.
EstimateResult estimate_from_values(Functional functional, const Dataset& data,
                                    const Eigen::VectorXd& alpha, const ArmValues& gamma_hat,
                                    const FeatureMap& diagnostic_map);

EstimateResult estimate(const Dataset& data, Functional functional, const RieszFit& riesz,
                        const OutcomeFit& outcome, const FeatureMap& diagnostic_map);

/// Diagnostics over the fitting map's features.
EstimateResult estimate(const Dataset& data, Functional functional, const RieszFit& riesz,
                        const OutcomeFit& outcome);

/// Fold label in [0, K) per row. Rows are ranked in lexicographic order of
/// (z, d, y) before a seeded shuffle, so the assignment of a given row does
/// not depend on the order in which rows were supplied.
std::vector<int> assign_folds(const Dataset& data, int folds, std::uint64_t seed);

/// Nuisances fitted on `train` and evaluated on `eval`.
struct FoldNuisance {
    Eigen::VectorXd alpha;
    ArmValues gamma_hat;
};
using FoldTrainer = std::function<FoldNuisance(const Dataset& train, const Dataset& eval)>;

/// Cross-fitted estimate for a given fold labelling. Fold estimates, gaps and
/// Neyman terms are pooled with weights n_k / n in fold order; RMS and max
/// are taken after pooling the gaps.
EstimateResult estimate_on_folds(const Dataset& data, Functional functional,
                                 const std::vector<int>& fold_of, int folds,
                                 const FoldTrainer& trainer, const FeatureMap& diagnostic_map,
                                 int jobs = 1);

EstimateResult crossfit_estimate(const Dataset& data, Functional functional,
                                 std::shared_ptr<const FeatureMap> map,
                                 const RieszConfig& riesz_config,
                                 const OutcomeConfig& outcome_config, int folds,
                                 std::uint64_t seed, const FeatureMap& diagnostic_map,
                                 int jobs = 1);

}  // namespace regbal
