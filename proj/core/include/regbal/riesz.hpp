#pragma once

#include "regbal/convex.hpp"
#include "regbal/dataset.hpp"
#include "regbal/features.hpp"
#include "regbal/functional.hpp"

#include <memory>
#include <string_view>

namespace regbal {

enum class RieszLoss { Squared, Ukl, Bp };

std::string_view to_string(RieszLoss loss);  // "sq", "ukl", "bp"
RieszLoss parse_loss(std::string_view name);

enum class RieszSolver { ClosedForm, ConvexIterative };

struct RieszConfig {
    RieszLoss loss = RieszLoss::Squared;
    double lambda = 0.0;  // multiplies |beta|^2
    BalancingScheme scheme = BalancingScheme::Regressor;
    RieszSolver solver = RieszSolver::ClosedForm;
    double tol = 1e-9;
    int max_iter = 500;

    /// Throws on negative lambda, nonpositive tol, or a closed-form request
    /// for a non-squared loss.
    void validate() const;
};

/// How the coefficient vector maps to the representer.
///   Linear:     alpha = offset(d) + Phi(d, z) . beta           (squared loss)
///   PerArm:     alpha = d w(c + psi.beta1) - (1-d) w(c + psi.beta0)
///   Mirrored:   alpha = d w(c + psi.beta) - (1-d) w(c - psi.beta)
///   ControlArm: alpha = (1-d) w(c + psi.beta)
/// where w is the link weight and psi the covariate basis.
enum class RieszParameterization { Linear, PerArm, Mirrored, ControlArm };

/// Fitted Riesz representer, evaluable at any (d, z).
class RieszFit {
public:
    RieszFit(RieszConfig config, Functional functional, std::shared_ptr<const FeatureMap> map,
             RieszParameterization parameterization, Eigen::VectorXd coefficients,
             double link_offset = 0.0, Eigen::Vector2d domain_cap = Eigen::Vector2d::Zero(),
             int iterations = 0, double gradient_norm = 0.0);

    /// alpha at the observed (d_i, z_i).
    Eigen::VectorXd evaluate(const Dataset& data) const;
    Eigen::VectorXd evaluate(const Eigen::VectorXd& d, const Eigen::MatrixXd& z) const;
    double evaluate(double d, const Eigen::RowVectorXd& z) const;

    const RieszConfig& config() const { return config_; }
    Functional functional() const { return functional_; }
    const FeatureMap& map() const { return *map_; }
    RieszParameterization parameterization() const { return parameterization_; }
    /// Linear: over balancing columns; PerArm: [treated | control]; otherwise beta.
    const Eigen::VectorXd& coefficients() const { return coefficients_; }
    double link_offset() const { return link_offset_; }
    int iterations() const { return iterations_; }
    double gradient_norm() const { return gradient_norm_; }

private:
    Eigen::VectorXd arm_weights(const Eigen::VectorXd& u, int arm) const;

    RieszConfig config_;
    Functional functional_;
    std::shared_ptr<const FeatureMap> map_;
    RieszParameterization parameterization_;
    Eigen::VectorXd coefficients_;
    double link_offset_;
    Eigen::Vector2d domain_cap_;  // largest in-sample predictor per arm (Bp only)
    int iterations_;
    double gradient_norm_;
};

/// Solves (G + lambda I) beta = b - c with G = Phi'Phi / n,
/// b = column means of counterfactual_m, c = Phi' offset / n.
/// The solution satisfies balancing_gap(alpha, Phi_j) = -lambda beta_j.
Eigen::VectorXd solve_riesz_sq(const BalancingBasis& basis, double lambda);

/// Squared-loss Riesz regression (closed form or iterative per config.solver).
RieszFit fit_riesz_sq(const Dataset& data, Functional functional,
                      std::shared_ptr<const FeatureMap> map, const RieszConfig& config);

/// UKL or BP Riesz regression with canonical links. At lambda = 0 the
/// stationarity conditions are exact balance of every fitted arm basis function.
RieszFit fit_riesz_generalized(const Dataset& data, Functional functional,
                               std::shared_ptr<const FeatureMap> map, const RieszConfig& config);

/// Dispatches on config.loss.
RieszFit fit_riesz(const Dataset& data, Functional functional,
                   std::shared_ptr<const FeatureMap> map, const RieszConfig& config);

/// Scalar summaries of the balancing gaps over a diagnostic basis.
struct ImbalanceReport {
    double covariate_rms = 0.0;
    double covariate_max = 0.0;
    double regressor_rms = 0.0;
    double regressor_max = 0.0;
};

/// Per-function balancing gaps. Covariate functions are psi_j(z); regressor
/// functions are d psi_j(z) followed by (1-d) psi_j(z). The diagnostic basis
/// never includes the intercept.
struct ImbalanceGaps {
    Eigen::VectorXd covariate;
    Eigen::VectorXd regressor;

    ImbalanceReport summary() const;
};

ImbalanceGaps imbalance_gaps(Functional functional, const Dataset& data,
                             const Eigen::VectorXd& alpha, const FeatureMap& diagnostic_map);

ImbalanceReport imbalance_report(const RieszFit& fit, const Dataset& data, Functional functional,
                                 const FeatureMap& diagnostic_map);

}  // namespace regbal
