#pragma once

#include "regbal/dataset.hpp"

#include <string_view>

namespace regbal {

/// Linear functional m(W; gamma) of the regression.
///   Ate:     m = gamma(1, Z) - gamma(0, Z)
///   AttMean: m = (D / pbar) * gamma(0, Z), pbar = mean(D) of the evaluated sample
enum class Functional { Ate, AttMean };

std::string_view to_string(Functional f);
Functional parse_functional(std::string_view name);

/// Sample share of treated units; throws "degenerate functional" when zero.
double treated_share(const Dataset& data);

/// m(W_i; f) for every row.
Eigen::VectorXd m_of_function(Functional functional, const Dataset& data, const ArmValues& f);

}  // namespace regbal
