#include "regbal/functional.hpp"

#include "regbal/error.hpp"

#include <string>

namespace regbal {

std::string_view to_string(Functional f) {
    return f == Functional::Ate ? "ate" : "att";
}

Functional parse_functional(std::string_view name) {
    if (name == "ate") return Functional::Ate;
    if (name == "att" || name == "att-mean") return Functional::AttMean;
    throw Error("unknown functional '" + std::string(name) + "'");
}

double treated_share(const Dataset& data) {
    if (data.treated_count() == 0) throw Error("degenerate functional: no treated units");
    return static_cast<double>(data.treated_count()) / static_cast<double>(data.n());
}

Eigen::VectorXd m_of_function(Functional functional, const Dataset& data, const ArmValues& f) {
    if (f.size() != data.n()) throw Error("function values do not match the sample size");
    if (functional == Functional::Ate) return f.at_treated - f.at_control;

    const double pbar = treated_share(data);
    return (data.d().array() / pbar * f.at_control.array()).matrix();
}

}  // namespace regbal
