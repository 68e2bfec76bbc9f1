#include "regbal/error.hpp"
#include "regbal/estimators.hpp"
#include "regbal/neyman.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace regbal;
using regbal::testing::random_dataset;
using regbal::testing::random_vector;

namespace {

std::shared_ptr<const FeatureMap> shared(FeatureMap m) {
    return std::make_shared<const FeatureMap>(std::move(m));
}

RieszConfig sq(double lambda, BalancingScheme s = BalancingScheme::Regressor) {
    RieszConfig c;
    c.lambda = lambda;
    c.scheme = s;
    return c;
}

}  // namespace

TEST(Estimate, ZeroRegressionMakesArwEqualRw) {
    const Dataset data = random_dataset(1, 80, 2);
    std::mt19937_64 rng(1);
    const Eigen::VectorXd alpha = random_vector(rng, data.n());
    const ScoreEstimates s =
        score_estimates(Functional::Ate, data, alpha, ArmValues::zeros(data.n()));
    EXPECT_DOUBLE_EQ(s.arw, s.rw);
    EXPECT_EQ(s.ra, 0.0);
}

TEST(Estimate, ZeroWeightsMakeArwEqualRa) {
    const Dataset data = random_dataset(2, 80, 2);
    std::mt19937_64 rng(2);
    const ArmValues g{random_vector(rng, data.n()), random_vector(rng, data.n())};
    for (Functional f : {Functional::Ate, Functional::AttMean}) {
        const ScoreEstimates s = score_estimates(f, data, Eigen::VectorXd::Zero(data.n()), g);
        EXPECT_DOUBLE_EQ(s.arw, s.ra);
        EXPECT_EQ(s.rw, 0.0);
    }
}

TEST(Estimate, ExactBalanceMakesRwEqualInfeasibleArw) {
    // gamma0 lies in the span of the regressor basis, which the lambda = 0
    // fit balances exactly.
    const Dataset base = random_dataset(3, 300, 2);
    const FeatureMap map = make_feature_map(2, 12, 1.0, 4);
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd psi = eval_covariate_basis(map, base.z());
    Oracle o{psi * random_vector(rng, map.q()), psi * random_vector(rng, map.q()), std::nullopt};
    Eigen::VectorXd y(base.n());
    for (Eigen::Index i = 0; i < base.n(); ++i) {
        y[i] = (base.d()[i] > 0.5 ? o.mu1[i] : o.mu0[i]) + 0.3 * random_vector(rng, 1)[0];
    }
    const Dataset data(base.d(), base.z(), y, o);
    const RieszFit fit = fit_riesz(data, Functional::Ate, shared(map), sq(0.0));
    const Eigen::VectorXd alpha = fit.evaluate(data);
    ASSERT_LE(std::abs(balancing_gap(Functional::Ate, data, alpha, data.gamma0())), 1e-10);

    const ScoreEstimates s = score_estimates(Functional::Ate, data, alpha, ArmValues::zeros(data.n()));
    double infeasible = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const double g = data.d()[i] > 0.5 ? o.mu1[i] : o.mu0[i];
        infeasible += (o.mu1[i] - o.mu0[i]) + alpha[i] * (y[i] - g);
    }
    infeasible /= double(data.n());
    EXPECT_NEAR(s.rw, infeasible, 1e-8);
}

TEST(Estimate, NeymanTermsAttachedWithOracle) {
    const Dataset data = random_dataset(4, 150, 2);
    const auto map = shared(make_feature_map(2, 8, 1.0, 1));
    const RieszFit r = fit_riesz(data, Functional::Ate, map, sq(0.01));
    const OutcomeFit o = fit_outcome(data, map, {});
    const EstimateResult e = estimate(data, Functional::Ate, r, o);
    ASSERT_TRUE(e.neyman.has_value());
    EXPECT_NEAR(e.neyman->ne, e.neyman->noise - e.neyman->drift, 1e-12);
    EXPECT_EQ(e.fold_count, 1);

    const Dataset blind(data.d(), data.z(), data.y());
    EXPECT_FALSE(estimate(blind, Functional::Ate, r, o).neyman.has_value());
}

TEST(EstimateProperty, RwIsLinearInOutcome) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset data = random_dataset(rng(), 50, 2);
        const Eigen::VectorXd alpha = random_vector(rng, data.n());
        const Eigen::VectorXd y2 = random_vector(rng, data.n());
        const double a = 1.7, b = -0.4;
        const auto rw = [&](const Eigen::VectorXd& y) {
            return score_estimates(Functional::Ate, data.with_outcome(y), alpha,
                                   ArmValues::zeros(data.n()))
                .rw;
        };
        EXPECT_NEAR(rw(a * data.y() + b * y2), a * rw(data.y()) + b * rw(y2), 1e-12);
    }
}

TEST(EstimateProperty, RegressionAdjustmentShiftsWithConstant) {
    std::mt19937_64 rng(6);
    const auto map = shared(make_feature_map(2, 6, 1.0, 2));
    for (int trial = 0; trial < 10; ++trial) {
        const Dataset data = random_dataset(rng(), 100, 2);
        const double c = 2.5;
        const Dataset shifted = data.with_outcome(data.y().array() + c);
        for (Functional f : {Functional::Ate, Functional::AttMean}) {
            const double ra0 =
                score_estimates(f, data, Eigen::VectorXd::Zero(data.n()),
                                fit_outcome(data, map, {}).predict_arms(data)).ra;
            const double ra1 =
                score_estimates(f, shifted, Eigen::VectorXd::Zero(data.n()),
                                fit_outcome(shifted, map, {}).predict_arms(shifted)).ra;
            EXPECT_NEAR(ra1 - ra0, f == Functional::Ate ? 0.0 : c, 1e-9);
        }
    }
}

TEST(Folds, NearEqualAndOrderInvariant) {
    const Dataset data = random_dataset(7, 103, 2);
    const std::vector<int> folds = assign_folds(data, 5, 99);
    std::vector<int> sizes(5, 0);
    for (int f : folds) sizes[f] += 1;
    EXPECT_EQ(*std::max_element(sizes.begin(), sizes.end()) -
                  *std::min_element(sizes.begin(), sizes.end()),
              1);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(data.n()));
    for (Eigen::Index i = 0; i < data.n(); ++i) perm[i] = data.n() - 1 - i;
    const std::vector<int> reversed = assign_folds(data.subset(perm), 5, 99);
    for (Eigen::Index i = 0; i < data.n(); ++i) EXPECT_EQ(reversed[perm[i]], folds[i]);
    EXPECT_NE(assign_folds(data, 5, 100), folds);
}

TEST(Folds, InvalidK) {
    const Dataset data = random_dataset(8, 10, 1);
    EXPECT_THROW(assign_folds(data, 1, 0), Error);
    EXPECT_THROW(assign_folds(data, 11, 0), Error);
}

TEST(CrossFit, DegenerateFoldIsReported) {
    // Only one treated unit: the fold holding it trains without treated rows.
    Eigen::VectorXd d = Eigen::VectorXd::Zero(20);
    d[3] = 1.0;
    const Dataset data(d, Eigen::MatrixXd::Random(20, 2), Eigen::VectorXd::Random(20));
    const auto map = shared(make_feature_map(2, 3, 1.0, 1));
    try {
        crossfit_estimate(data, Functional::Ate, map, sq(0.1), {}, 4, 1, *map);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "degenerate fold; reduce K or reseed");
    }
}

TEST(CrossFit, TrainingOnFullDataReproducesNoCrossFit) {
    const Dataset data = random_dataset(9, 200, 2);
    const auto map = shared(make_feature_map(2, 8, 1.0, 3));
    const RieszFit r = fit_riesz(data, Functional::Ate, map, sq(0.01));
    const OutcomeFit o = fit_outcome(data, map, {});
    const EstimateResult full = estimate(data, Functional::Ate, r, o);

    const FoldTrainer same_fit = [&](const Dataset&, const Dataset& eval) {
        return FoldNuisance{r.evaluate(eval), o.predict_arms(eval)};
    };
    const EstimateResult cf =
        estimate_on_folds(data, Functional::Ate, assign_folds(data, 5, 3), 5, same_fit, *map);
    EXPECT_EQ(cf.fold_count, 5);
    EXPECT_NEAR(cf.theta_ra, full.theta_ra, 1e-12);
    EXPECT_NEAR(cf.theta_rw, full.theta_rw, 1e-12);
    EXPECT_NEAR(cf.theta_arw, full.theta_arw, 1e-12);
    EXPECT_NEAR(cf.imbalance.regressor_rms, full.imbalance.regressor_rms, 1e-12);
    EXPECT_NEAR(cf.neyman->ne, full.neyman->ne, 1e-12);
}

TEST(CrossFit, WorkerCountDoesNotChangeResult) {
    const Dataset data = random_dataset(10, 250, 2);
    const auto map = shared(make_feature_map(2, 8, 1.0, 3));
    const EstimateResult a = crossfit_estimate(data, Functional::Ate, map, sq(0.01), {}, 5, 4, *map, 1);
    const EstimateResult b = crossfit_estimate(data, Functional::Ate, map, sq(0.01), {}, 5, 4, *map, 4);
    EXPECT_EQ(a.theta_arw, b.theta_arw);
    EXPECT_EQ(a.theta_rw, b.theta_rw);
    EXPECT_EQ(a.gaps.regressor, b.gaps.regressor);
}

TEST(CrossFit, EvaluationFoldsAreNotExactlyBalanced) {
    const Dataset data = random_dataset(11, 400, 2);
    const auto map = shared(make_feature_map(2, 10, 1.0, 3));
    const EstimateResult cf =
        crossfit_estimate(data, Functional::Ate, map, sq(0.0), {}, 5, 4, *map);
    EXPECT_GT(cf.imbalance.regressor_max, 1e-6);
    ASSERT_TRUE(cf.neyman.has_value());
    EXPECT_NEAR(cf.neyman->ne, cf.neyman->noise - cf.neyman->drift,
                1e-12 * std::max(1.0, std::abs(cf.neyman->ne)));
}
