#pragma once

#include "regbal/dataset.hpp"
#include "regbal/features.hpp"

#include <memory>
#include <string_view>

namespace regbal {

/// Constant: Y ~ [1, psi(Z), D].  Interacted: Y ~ [1, psi(Z), D, D psi(Z)].
enum class EffectModel { Constant, Interacted };

std::string_view to_string(EffectModel e);  // "constant", "interacted"
EffectModel parse_effect_model(std::string_view name);

struct OutcomeConfig {
    EffectModel effect = EffectModel::Constant;
    double ridge = 1e-3;  // applied to every coefficient except the intercept
};

/// Ridge outcome regression gamma_hat(d, z). psi never includes the map's
/// intercept column; the model carries its own unpenalized intercept.
class OutcomeFit {
public:
    OutcomeFit(OutcomeConfig config, std::shared_ptr<const FeatureMap> map,
               Eigen::VectorXd coefficients);

    Eigen::VectorXd predict(const Eigen::VectorXd& d, const Eigen::MatrixXd& z) const;
    double predict(double d, const Eigen::RowVectorXd& z) const;
    /// gamma_hat at (0, z_i) and (1, z_i).
    ArmValues predict_arms(const Dataset& data) const;

    const OutcomeConfig& config() const { return config_; }
    const FeatureMap& map() const { return *map_; }
    /// [intercept | psi | D | (D psi)].
    const Eigen::VectorXd& coefficients() const { return coefficients_; }

private:
    OutcomeConfig config_;
    std::shared_ptr<const FeatureMap> map_;
    Eigen::VectorXd coefficients_;
};

/// Regression design for the model, n x (2 + m) or n x (2 + 2m).
Eigen::MatrixXd outcome_design(const FeatureMap& map, EffectModel effect,
                               const Eigen::VectorXd& d, const Eigen::MatrixXd& z);

/// Solves (X'X / n + ridge * diag(0, 1, ..., 1)) c = X'y / n.
OutcomeFit fit_outcome(const Dataset& data, std::shared_ptr<const FeatureMap> map,
                       const OutcomeConfig& config);

}  // namespace regbal
