#include "regbal/features.hpp"

#include "regbal/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace regbal {

FeatureMap::FeatureMap(Eigen::MatrixXd frequencies, Eigen::VectorXd offsets, double bandwidth,
                       bool include_intercept, FeatureScale scale, std::uint64_t seed)
    : frequencies_(std::move(frequencies)),
      offsets_(std::move(offsets)),
      bandwidth_(bandwidth),
      include_intercept_(include_intercept),
      scale_(scale),
      seed_(seed) {
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
        throw Error("bandwidth must be positive");
    }
    if (frequencies_.cols() < 1) throw Error("feature map needs p >= 1");
    if (offsets_.size() != frequencies_.rows()) {
        throw Error("feature offsets must match the number of frequencies");
    }
    if (q() < 1) throw Error("feature map must produce at least one column");
}

double FeatureMap::amplitude() const {
    if (scale_ == FeatureScale::Unit || m() == 0) return std::sqrt(2.0);
    return std::sqrt(2.0 / static_cast<double>(m()));
}

Eigen::MatrixXd FeatureMap::features(const Eigen::MatrixXd& z) const {
    if (z.cols() != p()) {
        throw Error("covariate dimension " + std::to_string(z.cols()) +
                    " does not match feature map dimension " + std::to_string(p()));
    }
    Eigen::MatrixXd proj = z * frequencies_.transpose();
    proj.rowwise() += offsets_.transpose();
    return amplitude() * proj.array().cos().matrix();
}

bool operator==(const FeatureMap& a, const FeatureMap& b) {
    return a.frequencies_.rows() == b.frequencies_.rows() &&
           a.frequencies_.cols() == b.frequencies_.cols() && a.frequencies_ == b.frequencies_ &&
           a.offsets_ == b.offsets_ && a.bandwidth_ == b.bandwidth_ &&
           a.include_intercept_ == b.include_intercept_ && a.scale_ == b.scale_ &&
           a.seed_ == b.seed_;
}

FeatureMap FeatureMap::with_intercept(bool on) const {
    FeatureMap copy = *this;
    copy.include_intercept_ = on;
    if (copy.q() < 1) throw Error("feature map must produce at least one column");
    return copy;
}

FeatureMap make_feature_map(Eigen::Index p, Eigen::Index m, double bandwidth, std::uint64_t seed,
                            bool include_intercept, FeatureScale scale) {
    if (p < 1) throw Error("feature map needs p >= 1");
    if (m < 1) throw Error("feature map needs m >= 1");
    if (!(bandwidth > 0.0)) throw Error("bandwidth must be positive");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / bandwidth);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);

    Eigen::MatrixXd freq(m, p);
    for (Eigen::Index k = 0; k < m; ++k) {
        for (Eigen::Index j = 0; j < p; ++j) freq(k, j) = normal(rng);
    }
    Eigen::VectorXd offsets(m);
    for (Eigen::Index k = 0; k < m; ++k) offsets[k] = uniform(rng);
    return FeatureMap(std::move(freq), std::move(offsets), bandwidth, include_intercept, scale,
                      seed);
}

Eigen::MatrixXd eval_covariate_basis(const FeatureMap& map, const Eigen::MatrixXd& z) {
    Eigen::MatrixXd psi = map.features(z);
    if (!map.include_intercept()) return psi;
    Eigen::MatrixXd out(z.rows(), map.q());
    out.col(0).setOnes();
    out.rightCols(map.m()) = psi;
    return out;
}

std::string_view to_string(BalancingScheme s) {
    return s == BalancingScheme::Covariate ? "covariate" : "regressor";
}

BalancingScheme parse_scheme(std::string_view name) {
    if (name == "covariate") return BalancingScheme::Covariate;
    if (name == "regressor") return BalancingScheme::Regressor;
    throw Error("unknown balancing scheme '" + std::string(name) + "'");
}

Eigen::MatrixXd balancing_columns(const FeatureMap& map, BalancingScheme scheme,
                                  Functional functional, const Eigen::VectorXd& d,
                                  const Eigen::MatrixXd& z) {
    if (d.size() != z.rows()) throw Error("treatment and covariates differ in length");
    const Eigen::MatrixXd psi = eval_covariate_basis(map, z);
    const Eigen::ArrayXd control = 1.0 - d.array();

    if (functional == Functional::AttMean) {
        return (psi.array().colwise() * control).matrix();
    }
    if (scheme == BalancingScheme::Covariate) return psi;

    Eigen::MatrixXd out(z.rows(), 2 * map.q());
    out.leftCols(map.q()) = (psi.array().colwise() * d.array()).matrix();
    out.rightCols(map.q()) = (psi.array().colwise() * control).matrix();
    return out;
}

Eigen::VectorXd representer_offset(BalancingScheme scheme, Functional functional,
                                   const Eigen::VectorXd& d) {
    if (functional == Functional::Ate && scheme == BalancingScheme::Covariate) {
        return (2.0 * (2.0 * d.array() - 1.0)).matrix();
    }
    return Eigen::VectorXd::Zero(d.size());
}

BalancingBasis eval_balancing_basis(const FeatureMap& map, BalancingScheme scheme,
                                    const Dataset& data, Functional functional) {
    BalancingBasis out;
    out.columns = balancing_columns(map, scheme, functional, data.d(), data.z());
    out.offset_vals = representer_offset(scheme, functional, data.d());

    const Eigen::MatrixXd psi = eval_covariate_basis(map, data.z());
    if (functional == Functional::AttMean) {
        const double pbar = treated_share(data);
        out.counterfactual_m = (psi.array().colwise() * (data.d().array() / pbar)).matrix();
    } else if (scheme == BalancingScheme::Covariate) {
        out.counterfactual_m = Eigen::MatrixXd::Zero(data.n(), map.q());
    } else {
        out.counterfactual_m.resize(data.n(), 2 * map.q());
        out.counterfactual_m.leftCols(map.q()) = psi;
        out.counterfactual_m.rightCols(map.q()) = -psi;
    }
    return out;
}

}  // namespace regbal
