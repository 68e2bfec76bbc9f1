#include "regbal/outcome.hpp"

#include "regbal/error.hpp"

#include <cmath>
#include <string>

namespace regbal {

std::string_view to_string(EffectModel e) {
    return e == EffectModel::Constant ? "constant" : "interacted";
}

EffectModel parse_effect_model(std::string_view name) {
    if (name == "constant") return EffectModel::Constant;
    if (name == "interacted") return EffectModel::Interacted;
    throw Error("unknown effect model '" + std::string(name) + "'");
}

Eigen::MatrixXd outcome_design(const FeatureMap& map, EffectModel effect,
                               const Eigen::VectorXd& d, const Eigen::MatrixXd& z) {
    if (d.size() != z.rows()) throw Error("treatment and covariates differ in length");
    const Eigen::MatrixXd psi = map.features(z);
    const Eigen::Index m = psi.cols();
    const Eigen::Index cols = effect == EffectModel::Constant ? 2 + m : 2 + 2 * m;

    Eigen::MatrixXd x(z.rows(), cols);
    x.col(0).setOnes();
    x.middleCols(1, m) = psi;
    x.col(1 + m) = d;
    if (effect == EffectModel::Interacted) {
        x.rightCols(m) = (psi.array().colwise() * d.array()).matrix();
    }
    return x;
}

OutcomeFit::OutcomeFit(OutcomeConfig config, std::shared_ptr<const FeatureMap> map,
                       Eigen::VectorXd coefficients)
    : config_(config), map_(std::move(map)), coefficients_(std::move(coefficients)) {
    if (!map_) throw Error("outcome fit needs a feature map");
    const Eigen::Index expected =
        config_.effect == EffectModel::Constant ? 2 + map_->m() : 2 + 2 * map_->m();
    if (coefficients_.size() != expected) {
        throw Error("outcome coefficients do not match the model");
    }
}

Eigen::VectorXd OutcomeFit::predict(const Eigen::VectorXd& d, const Eigen::MatrixXd& z) const {
    return outcome_design(*map_, config_.effect, d, z) * coefficients_;
}

double OutcomeFit::predict(double d, const Eigen::RowVectorXd& z) const {
    return predict(Eigen::VectorXd::Constant(1, d), Eigen::MatrixXd(z))[0];
}

ArmValues OutcomeFit::predict_arms(const Dataset& data) const {
    const Eigen::Index n = data.n();
    return {predict(Eigen::VectorXd::Zero(n), data.z()),
            predict(Eigen::VectorXd::Ones(n), data.z())};
}

OutcomeFit fit_outcome(const Dataset& data, std::shared_ptr<const FeatureMap> map,
                       const OutcomeConfig& config) {
    if (!(config.ridge >= 0.0) || !std::isfinite(config.ridge)) {
        throw Error("outcome ridge must be nonnegative");
    }
    const Eigen::MatrixXd x = outcome_design(*map, config.effect, data.d(), data.z());
    const double n = static_cast<double>(data.n());

    Eigen::MatrixXd gram = x.transpose() * x / n;
    gram.diagonal().tail(x.cols() - 1).array() += config.ridge;
    const Eigen::VectorXd rhs = x.transpose() * data.y() / n;

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
        throw Error("singular outcome regression; increase the outcome ridge");
    }
    return OutcomeFit(config, std::move(map), llt.solve(rhs));
}

}  // namespace regbal
