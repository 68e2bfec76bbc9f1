#include "regbal/error.hpp"
#include "regbal/neyman.hpp"
#include "regbal/riesz.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace regbal;
using regbal::testing::intercept_only_map;
using regbal::testing::random_dataset;
using regbal::testing::vec;

namespace {

// Gaps of alpha over each fitted basis column, computed from the functional
// definition rather than from the solver's normal equations.
Eigen::VectorXd basis_gaps(Functional f, BalancingScheme s, const Dataset& data,
                           const FeatureMap& map, const Eigen::VectorXd& alpha) {
    const Eigen::Index n = data.n();
    const Eigen::MatrixXd at0 = balancing_columns(map, s, f, Eigen::VectorXd::Zero(n), data.z());
    const Eigen::MatrixXd at1 = balancing_columns(map, s, f, Eigen::VectorXd::Ones(n), data.z());
    Eigen::VectorXd gaps(at0.cols());
    for (Eigen::Index j = 0; j < at0.cols(); ++j) {
        gaps[j] = balancing_gap(f, data, alpha, {at0.col(j), at1.col(j)});
    }
    return gaps;
}

std::shared_ptr<const FeatureMap> shared(FeatureMap m) {
    return std::make_shared<const FeatureMap>(std::move(m));
}

RieszConfig sq(double lambda, BalancingScheme s = BalancingScheme::Regressor) {
    RieszConfig c;
    c.lambda = lambda;
    c.scheme = s;
    return c;
}

RieszConfig convex(RieszLoss loss, double lambda, BalancingScheme s) {
    RieszConfig c;
    c.loss = loss;
    c.lambda = lambda;
    c.scheme = s;
    c.solver = RieszSolver::ConvexIterative;
    return c;
}

const Dataset two_points(vec({1, 0}), Eigen::MatrixXd::Zero(2, 1), vec({0, 0}));

}  // namespace

TEST(RieszConfig, Validation) {
    RieszConfig c = sq(-1.0);
    try {
        c.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "lambda must be nonnegative");
    }
    c = sq(0.1);
    c.loss = RieszLoss::Ukl;
    EXPECT_THROW(c.validate(), Error);
    EXPECT_EQ(parse_loss("bp"), RieszLoss::Bp);
    EXPECT_EQ(to_string(RieszLoss::Ukl), "ukl");
    EXPECT_THROW(parse_loss("kl"), Error);
}

TEST(RieszSq, TwoPointHandSolve) {
    const RieszFit fit = fit_riesz_sq(two_points, Functional::Ate, shared(intercept_only_map(1)), sq(0.0));
    EXPECT_NEAR(fit.coefficients()[0], 2.0, 1e-14);
    EXPECT_NEAR(fit.coefficients()[1], -2.0, 1e-14);
    const Eigen::VectorXd alpha = fit.evaluate(two_points);
    EXPECT_NEAR(alpha[0], 2.0, 1e-14);
    EXPECT_NEAR(alpha[1], -2.0, 1e-14);
}

TEST(RieszSq, TwoPointRidge) {
    const auto map = shared(intercept_only_map(1));
    const RieszFit fit = fit_riesz_sq(two_points, Functional::Ate, map, sq(0.5));
    EXPECT_NEAR(fit.coefficients()[0], 1.0, 1e-14);
    EXPECT_NEAR(fit.coefficients()[1], -1.0, 1e-14);
    const Eigen::VectorXd gaps = basis_gaps(Functional::Ate, BalancingScheme::Regressor,
                                            two_points, *map, fit.evaluate(two_points));
    EXPECT_NEAR(gaps[0], -0.5, 1e-14);
    EXPECT_NEAR(gaps[1], 0.5, 1e-14);
}

TEST(RieszSq, ZeroRightHandSideGivesZeroCoefficients) {
    BalancingBasis b;
    b.columns = Eigen::MatrixXd::Random(10, 3);
    b.counterfactual_m = Eigen::MatrixXd::Zero(10, 3);
    b.offset_vals = Eigen::VectorXd::Zero(10);
    EXPECT_TRUE(solve_riesz_sq(b, 0.0).isZero(0.0));
}

TEST(RieszSq, RankDeficientBasisIsAnError) {
    Eigen::MatrixXd freq(2, 1);
    freq << 0.7, 0.7;
    const auto map = shared(FeatureMap(freq, vec({0.3, 0.3}), 1.0, true));
    const Dataset data = random_dataset(1, 50, 1);
    try {
        fit_riesz_sq(data, Functional::Ate, map, sq(0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("rank-deficient basis"), std::string::npos);
    }
    EXPECT_NO_THROW(fit_riesz_sq(data, Functional::Ate, map, sq(0.01)));
}

TEST(RieszSq, IterativeSolverMatchesClosedForm) {
    const Dataset data = random_dataset(2, 200, 2);
    const auto map = shared(make_feature_map(2, 10, 1.0, 5));
    for (BalancingScheme s : {BalancingScheme::Covariate, BalancingScheme::Regressor}) {
        RieszConfig iter = sq(0.01, s);
        iter.solver = RieszSolver::ConvexIterative;
        const RieszFit a = fit_riesz_sq(data, Functional::Ate, map, sq(0.01, s));
        const RieszFit b = fit_riesz_sq(data, Functional::Ate, map, iter);
        EXPECT_LE((a.coefficients() - b.coefficients()).lpNorm<Eigen::Infinity>(), 1e-8);
    }
}

TEST(RieszSqProperty, RidgeImbalanceIdentity) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const Dataset data = random_dataset(rng(), 80 + rng() % 100, 2);
        const auto map = shared(make_feature_map(2, 3 + rng() % 8, 1.0, rng()));
        const Functional f = trial % 3 == 0 ? Functional::AttMean : Functional::Ate;
        const BalancingScheme s =
            trial % 2 ? BalancingScheme::Regressor : BalancingScheme::Covariate;
        const double lambda = std::array{0.0, 0.01, 0.1, 1.0}[trial % 4];
        const RieszFit fit = fit_riesz_sq(data, f, map, sq(lambda, s));
        const Eigen::VectorXd gaps = basis_gaps(f, s, data, *map, fit.evaluate(data));
        EXPECT_LE((gaps + lambda * fit.coefficients()).lpNorm<Eigen::Infinity>(), 1e-8)
            << "trial " << trial;
    }
}

TEST(RieszSqProperty, JointSolveEqualsPerArmSolves) {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset data = random_dataset(rng(), 120, 2);
        const FeatureMap map = make_feature_map(2, 6, 1.0, rng());
        const double lambda = trial % 2 ? 0.05 : 0.0;
        const RieszFit fit = fit_riesz_sq(data, Functional::Ate, shared(map), sq(lambda));

        const Eigen::MatrixXd psi = eval_covariate_basis(map, data.z());
        const double n = double(data.n());
        const Eigen::VectorXd target = psi.colwise().mean().transpose();
        for (int arm = 0; arm < 2; ++arm) {
            Eigen::MatrixXd g = Eigen::MatrixXd::Zero(map.q(), map.q());
            for (Eigen::Index i = 0; i < data.n(); ++i) {
                if ((data.d()[i] > 0.5) == (arm == 1)) g += psi.row(i).transpose() * psi.row(i);
            }
            g /= n;
            g.diagonal().array() += lambda;
            const Eigen::VectorXd beta = g.ldlt().solve(arm == 1 ? target : Eigen::VectorXd(-target));
            const Eigen::VectorXd joint =
                arm == 1 ? fit.coefficients().head(map.q()) : fit.coefficients().tail(map.q());
            EXPECT_LE((beta - joint).lpNorm<Eigen::Infinity>(), 1e-10 * std::max(1.0, beta.norm()));
        }
    }
}

TEST(RieszSqProperty, CoefficientNormShrinksWithLambda) {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 10; ++trial) {
        const Dataset data = random_dataset(rng(), 150, 2);
        const auto map = shared(make_feature_map(2, 8, 1.0, rng()));
        double prev = std::numeric_limits<double>::infinity();
        for (double lambda : {0.0, 0.001, 0.01, 0.1, 1.0}) {
            const double norm = fit_riesz_sq(data, Functional::Ate, map, sq(lambda)).coefficients().norm();
            EXPECT_LE(norm, prev * (1 + 1e-12));
            prev = norm;
        }
    }
}

TEST(RieszGeneralized, UklTwoPointArms) {
    RieszConfig c = convex(RieszLoss::Ukl, 0.0, BalancingScheme::Regressor);
    const RieszFit fit =
        fit_riesz_generalized(two_points, Functional::Ate, shared(intercept_only_map(1)), c);
    EXPECT_EQ(fit.parameterization(), RieszParameterization::PerArm);
    EXPECT_NEAR(fit.coefficients()[0], std::log(2.0), 1e-9);
    EXPECT_NEAR(fit.coefficients()[1], std::log(2.0), 1e-9);
    const Eigen::VectorXd alpha = fit.evaluate(two_points);
    EXPECT_NEAR(alpha[0], 2.0, 1e-9);
    EXPECT_NEAR(alpha[1], -2.0, 1e-9);
}

TEST(RieszGeneralized, UklAttMeanTwoPoint) {
    RieszConfig c = convex(RieszLoss::Ukl, 0.0, BalancingScheme::Regressor);
    const RieszFit fit =
        fit_riesz_generalized(two_points, Functional::AttMean, shared(intercept_only_map(1)), c);
    ASSERT_EQ(fit.coefficients().size(), 1);
    EXPECT_NEAR(fit.coefficients()[0], std::log(2.0), 1e-9);
}

TEST(RieszGeneralized, ArmWeightsArePositive) {
    const Dataset data = random_dataset(40, 300, 2);
    const auto map = shared(make_feature_map(2, 6, 1.0, 4));
    for (RieszLoss loss : {RieszLoss::Ukl, RieszLoss::Bp}) {
        for (BalancingScheme s : {BalancingScheme::Covariate, BalancingScheme::Regressor}) {
            const RieszFit fit = fit_riesz(data, Functional::Ate, map, convex(loss, 0.01, s));
            const Eigen::VectorXd alpha = fit.evaluate(data);
            for (Eigen::Index i = 0; i < data.n(); ++i) {
                EXPECT_GT(data.d()[i] > 0.5 ? alpha[i] : -alpha[i], 0.0);
            }
            // Far outside the sample the representer stays finite.
            Eigen::MatrixXd far = Eigen::MatrixXd::Constant(2, 2, 8.0);
            EXPECT_TRUE(fit.evaluate(vec({1, 0}), far).allFinite());
        }
    }
}

TEST(RieszGeneralizedProperty, ExactBalanceAtZeroLambda) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 12; ++trial) {
        const Dataset data = random_dataset(rng(), 400, 2);
        const auto map = shared(make_feature_map(2, 5, 1.5, rng(), true, FeatureScale::Unit));
        const RieszLoss loss = trial % 2 ? RieszLoss::Ukl : RieszLoss::Bp;
        const Functional f = trial % 3 == 2 ? Functional::AttMean : Functional::Ate;
        const BalancingScheme s =
            (trial / 2) % 2 ? BalancingScheme::Regressor : BalancingScheme::Covariate;
        RieszConfig c = convex(loss, 0.0, s);
        const RieszFit fit = fit_riesz(data, f, map, c);
        const Eigen::VectorXd alpha = fit.evaluate(data);
        // Covariate + Ate balances psi(z); every other combination balances its arm columns.
        const BalancingScheme balanced =
            f == Functional::Ate && s == BalancingScheme::Covariate ? BalancingScheme::Covariate
                                                                    : BalancingScheme::Regressor;
        const Eigen::VectorXd gaps = f == Functional::Ate && balanced == BalancingScheme::Covariate
                                         ? Eigen::VectorXd(eval_covariate_basis(*map, data.z()).transpose() * alpha / double(data.n()))
                                         : basis_gaps(f, balanced, data, *map, alpha);
        EXPECT_LE(gaps.lpNorm<Eigen::Infinity>(), 10 * c.tol) << "trial " << trial;
    }
}

TEST(RieszGeneralizedProperty, UklAttMeanIsEntropyBalancing) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 8; ++trial) {
        const Dataset data = random_dataset(rng(), 500, 3);
        const FeatureMap map = make_feature_map(3, 6, 2.0, rng());
        const RieszFit fit = fit_riesz(data, Functional::AttMean, shared(map),
                                       convex(RieszLoss::Ukl, 0.0, BalancingScheme::Covariate));
        const Eigen::VectorXd alpha = fit.evaluate(data);
        const Eigen::MatrixXd psi = eval_covariate_basis(map, data.z());
        Eigen::VectorXd weighted_control = Eigen::VectorXd::Zero(psi.cols());
        Eigen::VectorXd treated_mean = Eigen::VectorXd::Zero(psi.cols());
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            if (data.d()[i] > 0.5) {
                treated_mean += psi.row(i).transpose();
            } else {
                weighted_control += alpha[i] * psi.row(i).transpose();
            }
        }
        treated_mean /= double(data.treated_count());
        weighted_control /= double(data.n());
        // Intercept row: control weights average to one over the sample.
        EXPECT_NEAR(weighted_control[0], 1.0, 1e-6);
        EXPECT_LE((weighted_control - treated_mean).lpNorm<Eigen::Infinity>(), 1e-6);
    }
}

TEST(Imbalance, ZeroWeightsGiveCounterfactualMeans) {
    const Dataset data = random_dataset(50, 60, 2);
    const FeatureMap diag = make_feature_map(2, 5, 1.0, 8, false);
    const ImbalanceGaps g =
        imbalance_gaps(Functional::Ate, data, Eigen::VectorXd::Zero(data.n()), diag);
    const Eigen::VectorXd means = diag.features(data.z()).colwise().mean().transpose();
    EXPECT_TRUE(g.covariate.isZero(0.0));
    EXPECT_LE((g.regressor.head(5) + means).lpNorm<Eigen::Infinity>(), 1e-15);
    EXPECT_LE((g.regressor.tail(5) - means).lpNorm<Eigen::Infinity>(), 1e-15);
    const ImbalanceReport r = g.summary();
    EXPECT_NEAR(r.regressor_rms, std::sqrt(means.squaredNorm() / 5), 1e-15);
    EXPECT_EQ(r.covariate_rms, 0.0);
}

TEST(Imbalance, ExactRegressorFitHasNoRegressorImbalance) {
    const Dataset data = random_dataset(51, 300, 2);
    const auto map = shared(make_feature_map(2, 20, 1.0, 9));
    const RieszFit fit = fit_riesz(data, Functional::Ate, map, sq(0.0));
    const ImbalanceReport r = imbalance_report(fit, data, Functional::Ate, *map);
    EXPECT_LE(r.regressor_rms, 1e-8);
    EXPECT_LE(r.regressor_max, 1e-8);
    EXPECT_LE(r.covariate_max, 1e-8);
}

TEST(Imbalance, CovariateFitLeavesRegressorImbalance) {
    const Dataset data = random_dataset(52, 300, 2);
    const auto map = shared(make_feature_map(2, 20, 1.0, 9));
    const RieszFit fit = fit_riesz(data, Functional::Ate, map, sq(0.0, BalancingScheme::Covariate));
    const ImbalanceReport r = imbalance_report(fit, data, Functional::Ate, *map);
    EXPECT_LE(r.covariate_max, 1e-8);
    EXPECT_GT(r.regressor_max, 1e-3);
}

TEST(Imbalance, AttMeanCovariateGapSubtractsTreatedMean) {
    const Dataset data = random_dataset(53, 40, 2);
    const FeatureMap diag = make_feature_map(2, 3, 1.0, 1, false);
    std::mt19937_64 rng(5);
    const Eigen::VectorXd alpha = regbal::testing::random_vector(rng, data.n());
    const ImbalanceGaps g = imbalance_gaps(Functional::AttMean, data, alpha, diag);
    const Eigen::MatrixXd psi = diag.features(data.z());
    const double pbar = double(data.treated_count()) / double(data.n());
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double expected = (alpha.dot(psi.col(j)) - psi.col(j).dot(data.d()) / pbar) / double(data.n());
        EXPECT_NEAR(g.covariate[j], expected, 1e-14);
    }
}
