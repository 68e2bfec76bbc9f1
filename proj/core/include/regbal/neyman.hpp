#pragma once

#include "regbal/dataset.hpp"
#include "regbal/functional.hpp"

namespace regbal {

/// Balancing gap (1/n) sum_i [alpha(X_i) f(X_i) - m(W_i; f)], accumulated in
/// ascending row order with compensated summation.
double balancing_gap(Functional functional, const Dataset& data,
                     const Eigen::VectorXd& alpha, const ArmValues& f);

/// Neyman error of the plug-in score:
/// (1/n) sum_i [alpha_i (Y_i - gamma_hat(X_i)) + m(W_i; gamma_hat) - m(W_i; gamma0)].
/// Requires an oracle.
double neyman_error(Functional functional, const Dataset& data,
                    const ArmValues& gamma_hat, const Eigen::VectorXd& alpha);

struct NeymanTerms {
    double noise = 0.0;  // (1/n) sum alpha_i * eps_i, eps = Y - gamma0(X)
    double drift = 0.0;  // balancing_gap(alpha, gamma_hat - gamma0)
};

/// neyman_error == noise - drift up to rounding.
NeymanTerms neyman_decomposition(Functional functional, const Dataset& data,
                                 const ArmValues& gamma_hat, const Eigen::VectorXd& alpha);

}  // namespace regbal
