#include "regbal/dataset.hpp"

#include "regbal/error.hpp"

#include <cmath>
#include <string>

namespace regbal {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* name) {
    if (!m.allFinite()) throw Error(std::string("non-finite value in ") + name);
}

}  // namespace

ArmValues operator-(const ArmValues& a, const ArmValues& b) {
    return {a.at_control - b.at_control, a.at_treated - b.at_treated};
}

Dataset::Dataset(Eigen::VectorXd d, Eigen::MatrixXd z, Eigen::VectorXd y,
                 std::optional<Oracle> oracle)
    : d_(std::move(d)), z_(std::move(z)), y_(std::move(y)), oracle_(std::move(oracle)) {
    const Eigen::Index n = d_.size();
    if (n < 1) throw Error("dataset must contain at least one observation");
    if (z_.rows() != n || y_.size() != n) {
        throw Error("dataset columns have inconsistent lengths");
    }
    if (z_.cols() < 1) throw Error("dataset needs at least one covariate");
    require_finite(d_, "treatment");
    require_finite(z_, "covariates");
    require_finite(y_, "outcome");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (d_[i] != 0.0 && d_[i] != 1.0) {
            throw Error("treatment must be 0 or 1 (row " + std::to_string(i) + ")");
        }
        if (d_[i] == 1.0) ++treated_;
    }
    if (oracle_) {
        if (oracle_->mu0.size() != n || oracle_->mu1.size() != n ||
            (oracle_->e0 && oracle_->e0->size() != n)) {
            throw Error("oracle arrays must have length n");
        }
        require_finite(oracle_->mu0, "oracle mu0");
        require_finite(oracle_->mu1, "oracle mu1");
        if (oracle_->e0) require_finite(*oracle_->e0, "oracle e0");
    }
}

const Oracle& Dataset::oracle() const {
    if (!oracle_) throw Error("oracle regression required");
    return *oracle_;
}

void Dataset::require_both_arms(const char* context) const {
    if (n() < 2 || treated_ == 0 || treated_ == n()) {
        throw Error(std::string(context) + ": both treatment arms must be non-empty");
    }
}

ArmValues Dataset::gamma0() const {
    const Oracle& o = oracle();
    return {o.mu0, o.mu1};
}

Dataset Dataset::subset(std::span<const Eigen::Index> rows) const {
    const auto k = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd d(k), y(k);
    Eigen::MatrixXd z(k, p());
    std::optional<Oracle> o;
    if (oracle_) {
        o = Oracle{Eigen::VectorXd(k), Eigen::VectorXd(k), std::nullopt};
        if (oracle_->e0) o->e0 = Eigen::VectorXd(k);
    }
    for (Eigen::Index r = 0; r < k; ++r) {
        const Eigen::Index i = rows[static_cast<std::size_t>(r)];
        if (i < 0 || i >= n()) throw Error("subset row out of range");
        d[r] = d_[i];
        y[r] = y_[i];
        z.row(r) = z_.row(i);
        if (o) {
            o->mu0[r] = oracle_->mu0[i];
            o->mu1[r] = oracle_->mu1[i];
            if (o->e0) (*o->e0)[r] = (*oracle_->e0)[i];
        }
    }
    return Dataset(std::move(d), std::move(z), std::move(y), std::move(o));
}

Dataset Dataset::with_outcome(Eigen::VectorXd y) const {
    return Dataset(d_, z_, std::move(y), oracle_);
}

ArmValues evaluate_arms(const Dataset& data,
                        const std::function<double(double, const Eigen::RowVectorXd&)>& f) {
    ArmValues out = ArmValues::zeros(data.n());
    Eigen::RowVectorXd row;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        row = data.z().row(i);
        out.at_control[i] = f(0.0, row);
        out.at_treated[i] = f(1.0, row);
    }
    return out;
}

}  // namespace regbal
