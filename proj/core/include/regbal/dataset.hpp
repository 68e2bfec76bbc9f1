#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>

namespace regbal {

/// True conditional means for synthetic or semi-synthetic data.
/// gamma0(d, z_i) = (1 - d) * mu0_i + d * mu1_i.
struct Oracle {
    Eigen::VectorXd mu0;
    Eigen::VectorXd mu1;
    std::optional<Eigen::VectorXd> e0;  // true propensity, synthetic only
};

/// A function of the regressor evaluated at both treatment levels for every
/// sample row: at_control[i] = f(0, z_i), at_treated[i] = f(1, z_i).
struct ArmValues {
    Eigen::VectorXd at_control;
    Eigen::VectorXd at_treated;

    Eigen::Index size() const { return at_control.size(); }

    /// f(d, z_i).
    double at(Eigen::Index i, double d) const {
        return d > 0.5 ? at_treated[i] : at_control[i];
    }

    static ArmValues zeros(Eigen::Index n) {
        return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    }
};

ArmValues operator-(const ArmValues& a, const ArmValues& b);

/// Observations (D, Z, Y) with an optional oracle. Immutable after
/// construction; the constructor validates shapes, finiteness and that
/// treatment is binary.
class Dataset {
public:
    Dataset(Eigen::VectorXd d, Eigen::MatrixXd z, Eigen::VectorXd y,
            std::optional<Oracle> oracle = std::nullopt);

    Eigen::Index n() const { return d_.size(); }
    Eigen::Index p() const { return z_.cols(); }
    const Eigen::VectorXd& d() const { return d_; }
    const Eigen::MatrixXd& z() const { return z_; }
    const Eigen::VectorXd& y() const { return y_; }

    bool has_oracle() const { return oracle_.has_value(); }
    const Oracle& oracle() const;

    Eigen::Index treated_count() const { return treated_; }
    Eigen::Index control_count() const { return n() - treated_; }

    /// Throws unless n >= 2 and both arms are non-empty.
    void require_both_arms(const char* context) const;

    /// gamma0 at both treatment levels; throws "oracle regression required".
    ArmValues gamma0() const;

    /// Rows `rows` in the given order, oracle included.
    Dataset subset(std::span<const Eigen::Index> rows) const;

    /// Same covariates and treatment, new outcome.
    Dataset with_outcome(Eigen::VectorXd y) const;

private:
    Eigen::VectorXd d_;
    Eigen::MatrixXd z_;
    Eigen::VectorXd y_;
    std::optional<Oracle> oracle_;
    Eigen::Index treated_ = 0;
};

/// Evaluates f(d, z) at (0, z_i) and (1, z_i) for every row of `data`.
ArmValues evaluate_arms(const Dataset& data,
                        const std::function<double(double, const Eigen::RowVectorXd&)>& f);

}  // namespace regbal
