#include "regbal/neyman.hpp"

#include "regbal/error.hpp"
#include "regbal/summation.hpp"

namespace regbal {

namespace {

void check_alpha(const Dataset& data, const Eigen::VectorXd& alpha) {
    if (alpha.size() != data.n()) throw Error("representer values do not match the sample size");
    if (!alpha.allFinite()) throw Error("representer values must be finite");
}

}  // namespace

double balancing_gap(Functional functional, const Dataset& data,
                     const Eigen::VectorXd& alpha, const ArmValues& f) {
    check_alpha(data, alpha);
    const Eigen::VectorXd m = m_of_function(functional, data, f);
    const auto& d = data.d();
    return compensated_mean(data.n(), [&](Eigen::Index i) {
        return alpha[i] * f.at(i, d[i]) - m[i];
    });
}

double neyman_error(Functional functional, const Dataset& data,
                    const ArmValues& gamma_hat, const Eigen::VectorXd& alpha) {
    check_alpha(data, alpha);
    const ArmValues gamma0 = data.gamma0();
    const Eigen::VectorXd m_hat = m_of_function(functional, data, gamma_hat);
    const Eigen::VectorXd m_true = m_of_function(functional, data, gamma0);
    const auto& d = data.d();
    const auto& y = data.y();
    return compensated_mean(data.n(), [&](Eigen::Index i) {
        return alpha[i] * (y[i] - gamma_hat.at(i, d[i])) + m_hat[i] - m_true[i];
    });
}

NeymanTerms neyman_decomposition(Functional functional, const Dataset& data,
                                 const ArmValues& gamma_hat, const Eigen::VectorXd& alpha) {
    check_alpha(data, alpha);
    const ArmValues gamma0 = data.gamma0();
    const auto& d = data.d();
    const auto& y = data.y();
    NeymanTerms out;
    out.noise = compensated_mean(data.n(), [&](Eigen::Index i) {
        return alpha[i] * (y[i] - gamma0.at(i, d[i]));
    });
    out.drift = balancing_gap(functional, data, alpha, gamma_hat - gamma0);
    return out;
}

}  // namespace regbal
