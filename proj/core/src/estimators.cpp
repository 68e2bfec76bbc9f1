#include "regbal/estimators.hpp"

#include "regbal/error.hpp"
#include "regbal/neyman.hpp"
#include "regbal/parallel.hpp"
#include "regbal/summation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace regbal {

ScoreEstimates score_estimates(Functional functional, const Dataset& data,
                               const Eigen::VectorXd& alpha, const ArmValues& gamma_hat) {
    const Eigen::Index n = data.n();
    if (alpha.size() != n || gamma_hat.size() != n) {
        throw Error("nuisance values do not match the sample");
    }
    const Eigen::VectorXd m = m_of_function(functional, data, gamma_hat);
    const Eigen::VectorXd& d = data.d();
    const Eigen::VectorXd& y = data.y();

    ScoreEstimates out;
    out.ra = compensated_mean(n, [&](Eigen::Index i) { return m[i]; });
    out.rw = compensated_mean(n, [&](Eigen::Index i) { return alpha[i] * y[i]; });
    out.arw = compensated_mean(n, [&](Eigen::Index i) {
        return m[i] + alpha[i] * (y[i] - gamma_hat.at(i, d[i]));
    });
    return out;
}

EstimateResult estimate_from_values(Functional functional, const Dataset& data,
                                    const Eigen::VectorXd& alpha, const ArmValues& gamma_hat,
                                    const FeatureMap& diagnostic_map) {
    const ScoreEstimates s = score_estimates(functional, data, alpha, gamma_hat);
    EstimateResult r;
    r.theta_ra = s.ra;
    r.theta_rw = s.rw;
    r.theta_arw = s.arw;
    r.gaps = imbalance_gaps(functional, data, alpha, diagnostic_map);
    r.imbalance = r.gaps.summary();
    if (data.has_oracle()) {
        const NeymanTerms t = neyman_decomposition(functional, data, gamma_hat, alpha);
        r.neyman = NeymanReport{neyman_error(functional, data, gamma_hat, alpha), t.noise,
                                t.drift};
    }
    return r;
}

EstimateResult estimate(const Dataset& data, Functional functional, const RieszFit& riesz,
                        const OutcomeFit& outcome, const FeatureMap& diagnostic_map) {
    return estimate_from_values(functional, data, riesz.evaluate(data),
                                outcome.predict_arms(data), diagnostic_map);
}

EstimateResult estimate(const Dataset& data, Functional functional, const RieszFit& riesz,
                        const OutcomeFit& outcome) {
    return estimate(data, functional, riesz, outcome, riesz.map());
}

std::vector<int> assign_folds(const Dataset& data, int folds, std::uint64_t seed) {
    const Eigen::Index n = data.n();
    if (folds < 2) throw Error("cross-fitting needs K >= 2");
    if (folds > n) throw Error("cross-fitting needs at least K rows");

    const Eigen::MatrixXd& z = data.z();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            if (z(a, j) != z(b, j)) return z(a, j) < z(b, j);
        }
        if (data.d()[a] != data.d()[b]) return data.d()[a] < data.d()[b];
        return data.y()[a] < data.y()[b];
    });

    // Fisher-Yates with a portable integer stream.
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = derive_seed(seed, i) % i;
        std::swap(order[i - 1], order[j]);
    }
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < order.size(); ++r) {
        fold_of[static_cast<std::size_t>(order[r])] = static_cast<int>(r % folds);
    }
    return fold_of;
}

EstimateResult estimate_on_folds(const Dataset& data, Functional functional,
                                 const std::vector<int>& fold_of, int folds,
                                 const FoldTrainer& trainer, const FeatureMap& diagnostic_map,
                                 int jobs) {
    const Eigen::Index n = data.n();
    if (static_cast<Eigen::Index>(fold_of.size()) != n) {
        throw Error("fold labels do not match the sample");
    }
    std::vector<std::vector<Eigen::Index>> eval_rows(folds), train_rows(folds);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int f = fold_of[static_cast<std::size_t>(i)];
        if (f < 0 || f >= folds) throw Error("fold label out of range");
        for (int k = 0; k < folds; ++k) (k == f ? eval_rows : train_rows)[k].push_back(i);
    }
    for (int k = 0; k < folds; ++k) {
        bool treated = false, control = false;
        for (Eigen::Index i : train_rows[k]) (data.d()[i] > 0.5 ? treated : control) = true;
        if (eval_rows[k].empty() || !treated || !control) {
            throw Error("degenerate fold; reduce K or reseed");
        }
    }

    std::vector<EstimateResult> parts(static_cast<std::size_t>(folds));
    parallel_for(static_cast<std::size_t>(folds), jobs, [&](std::size_t k) {
        const Dataset train = data.subset(train_rows[k]);
        const Dataset eval = data.subset(eval_rows[k]);
        const FoldNuisance nu = trainer(train, eval);
        parts[k] = estimate_from_values(functional, eval, nu.alpha, nu.gamma_hat, diagnostic_map);
    });

    EstimateResult pooled;
    pooled.fold_count = folds;
    pooled.gaps.covariate = Eigen::VectorXd::Zero(parts[0].gaps.covariate.size());
    pooled.gaps.regressor = Eigen::VectorXd::Zero(parts[0].gaps.regressor.size());
    if (data.has_oracle()) pooled.neyman = NeymanReport{};
    for (int k = 0; k < folds; ++k) {
        const EstimateResult& p = parts[static_cast<std::size_t>(k)];
        const double w = static_cast<double>(eval_rows[k].size()) / static_cast<double>(n);
        pooled.theta_ra += w * p.theta_ra;
        pooled.theta_rw += w * p.theta_rw;
        pooled.theta_arw += w * p.theta_arw;
        pooled.gaps.covariate += w * p.gaps.covariate;
        pooled.gaps.regressor += w * p.gaps.regressor;
        if (pooled.neyman) {
            pooled.neyman->ne += w * p.neyman->ne;
            pooled.neyman->noise += w * p.neyman->noise;
            pooled.neyman->drift += w * p.neyman->drift;
        }
    }
    pooled.imbalance = pooled.gaps.summary();
    return pooled;
}

EstimateResult crossfit_estimate(const Dataset& data, Functional functional,
                                 std::shared_ptr<const FeatureMap> map,
                                 const RieszConfig& riesz_config,
                                 const OutcomeConfig& outcome_config, int folds,
                                 std::uint64_t seed, const FeatureMap& diagnostic_map, int jobs) {
    const std::vector<int> fold_of = assign_folds(data, folds, seed);
    const FoldTrainer trainer = [&](const Dataset& train, const Dataset& eval) {
        const RieszFit riesz = fit_riesz(train, functional, map, riesz_config);
        const OutcomeFit outcome = fit_outcome(train, map, outcome_config);
        return FoldNuisance{riesz.evaluate(eval), outcome.predict_arms(eval)};
    };
    return estimate_on_folds(data, functional, fold_of, folds, trainer, diagnostic_map, jobs);
}

}  // namespace regbal
