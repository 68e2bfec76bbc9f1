#include "regbal/riesz.hpp"

#include "regbal/error.hpp"
#include "regbal/neyman.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace regbal {

namespace {

LinkLoss link_of(RieszLoss loss) {
    switch (loss) {
        case RieszLoss::Squared:
            return LinkLoss::Squared;
        case RieszLoss::Ukl:
            return LinkLoss::Ukl;
        case RieszLoss::Bp:
            return LinkLoss::Bp;
    }
    return LinkLoss::Squared;
}

// Predictor at which a positive-weight arm starts: w(c) = 1.
double unit_weight_offset(RieszLoss loss) {
    return loss == RieszLoss::Bp ? -std::log(2.0) : 0.0;
}

// Predictor at which w(c) = 2, the randomized-assignment magnitude.
double mirrored_offset(RieszLoss loss) {
    return loss == RieszLoss::Bp ? std::log(2.0 / 3.0) : std::log(2.0);
}

std::vector<Eigen::Index> rows_in_arm(const Eigen::VectorXd& d, bool treated) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if ((d[i] > 0.5) == treated) rows.push_back(i);
    }
    return rows;
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& x) {
    if (x.rows() == 0) return Eigen::VectorXd::Zero(x.cols());
    return x.colwise().sum().transpose() / static_cast<double>(x.rows());
}

struct ArmSolve {
    Eigen::VectorXd beta;
    double cap = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;
};

ArmSolve solve_arm(Eigen::MatrixXd design, double offset, Eigen::VectorXd target, double n_total,
                   const RieszConfig& config) {
    CanonicalProblem pr;
    pr.offset = Eigen::VectorXd::Constant(design.rows(), offset);
    pr.design = std::move(design);
    pr.target = std::move(target);
    pr.lambda = config.lambda;
    pr.n_total = n_total;
    pr.loss = link_of(config.loss);
    CanonicalSolution sol = minimize_canonical(pr, config.tol, config.max_iter);

    ArmSolve out;
    const Eigen::VectorXd u = pr.offset + pr.design * sol.beta;
    out.cap = u.size() > 0 ? u.maxCoeff() : offset;
    out.beta = std::move(sol.beta);
    out.iterations = sol.iterations;
    out.gradient_norm = sol.gradient_norm;
    return out;
}

double rms(const Eigen::VectorXd& v) {
    if (v.size() == 0) return 0.0;
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

double max_abs(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

std::string_view to_string(RieszLoss loss) {
    switch (loss) {
        case RieszLoss::Squared:
            return "sq";
        case RieszLoss::Ukl:
            return "ukl";
        case RieszLoss::Bp:
            return "bp";
    }
    return "?";
}

RieszLoss parse_loss(std::string_view name) {
    if (name == "sq") return RieszLoss::Squared;
    if (name == "ukl") return RieszLoss::Ukl;
    if (name == "bp") return RieszLoss::Bp;
    throw Error("unknown loss '" + std::string(name) + "'");
}

void RieszConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("lambda must be nonnegative");
    if (!(tol > 0.0)) throw Error("tolerance must be positive");
    if (max_iter < 1) throw Error("max_iter must be at least 1");
    if (solver == RieszSolver::ClosedForm && loss != RieszLoss::Squared) {
        throw Error("closed-form solver supports only the squared loss");
    }
}

RieszFit::RieszFit(RieszConfig config, Functional functional,
                   std::shared_ptr<const FeatureMap> map, RieszParameterization parameterization,
                   Eigen::VectorXd coefficients, double link_offset, Eigen::Vector2d domain_cap,
                   int iterations, double gradient_norm)
    : config_(config),
      functional_(functional),
      map_(std::move(map)),
      parameterization_(parameterization),
      coefficients_(std::move(coefficients)),
      link_offset_(link_offset),
      domain_cap_(domain_cap),
      iterations_(iterations),
      gradient_norm_(gradient_norm) {
    if (!map_) throw Error("Riesz fit needs a feature map");
}

Eigen::VectorXd RieszFit::arm_weights(const Eigen::VectorXd& u, int arm) const {
    const LinkLoss link = link_of(config_.loss);
    Eigen::VectorXd w(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        // Out-of-sample predictors can cross the BP pole; hold them at the
        // largest value seen in fitting.
        const double ui = link == LinkLoss::Bp ? std::min(u[i], domain_cap_[arm]) : u[i];
        w[i] = link_weight(link, ui);
    }
    return w;
}

Eigen::VectorXd RieszFit::evaluate(const Eigen::VectorXd& d, const Eigen::MatrixXd& z) const {
    if (d.size() != z.rows()) throw Error("treatment and covariates differ in length");
    if (parameterization_ == RieszParameterization::Linear) {
        return representer_offset(config_.scheme, functional_, d) +
               balancing_columns(*map_, config_.scheme, functional_, d, z) * coefficients_;
    }

    const Eigen::MatrixXd psi = eval_covariate_basis(*map_, z);
    const Eigen::Index q = psi.cols();
    const Eigen::ArrayXd treated = d.array();
    const Eigen::ArrayXd control = 1.0 - treated;
    const Eigen::VectorXd base = Eigen::VectorXd::Constant(d.size(), link_offset_);

    switch (parameterization_) {
        case RieszParameterization::PerArm: {
            const Eigen::VectorXd w1 = arm_weights(base + psi * coefficients_.head(q), 1);
            const Eigen::VectorXd w0 = arm_weights(base + psi * coefficients_.tail(q), 0);
            return (treated * w1.array() - control * w0.array()).matrix();
        }
        case RieszParameterization::Mirrored: {
            const Eigen::VectorXd lin = psi * coefficients_;
            const Eigen::VectorXd w1 = arm_weights(base + lin, 1);
            const Eigen::VectorXd w0 = arm_weights(base - lin, 0);
            return (treated * w1.array() - control * w0.array()).matrix();
        }
        case RieszParameterization::ControlArm: {
            const Eigen::VectorXd w = arm_weights(base + psi * coefficients_, 0);
            return (control * w.array()).matrix();
        }
        case RieszParameterization::Linear:
            break;
    }
    return Eigen::VectorXd::Zero(d.size());
}

Eigen::VectorXd RieszFit::evaluate(const Dataset& data) const {
    return evaluate(data.d(), data.z());
}

double RieszFit::evaluate(double d, const Eigen::RowVectorXd& z) const {
    return evaluate(Eigen::VectorXd::Constant(1, d), Eigen::MatrixXd(z))[0];
}

Eigen::VectorXd solve_riesz_sq(const BalancingBasis& basis, double lambda) {
    const Eigen::MatrixXd& phi = basis.columns;
    const Eigen::Index n = phi.rows();
    if (n == 0) throw Error("Riesz regression needs at least one row");
    if (basis.counterfactual_m.rows() != n || basis.counterfactual_m.cols() != phi.cols() ||
        basis.offset_vals.size() != n) {
        throw Error("balancing basis has inconsistent dimensions");
    }
    const double nd = static_cast<double>(n);

    Eigen::MatrixXd gram = phi.transpose() * phi / nd;
    gram.diagonal().array() += lambda;
    const Eigen::VectorXd rhs =
        column_means(basis.counterfactual_m) - phi.transpose() * basis.offset_vals / nd;

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
        throw Error("rank-deficient basis; increase λ or reduce features");
    }
    return llt.solve(rhs);
}

RieszFit fit_riesz_sq(const Dataset& data, Functional functional,
                      std::shared_ptr<const FeatureMap> map, const RieszConfig& config) {
    config.validate();
    if (config.loss != RieszLoss::Squared) throw Error("fit_riesz_sq needs the squared loss");
    data.require_both_arms("Riesz regression");

    const BalancingBasis basis = eval_balancing_basis(*map, config.scheme, data, functional);
    if (config.solver == RieszSolver::ClosedForm) {
        Eigen::VectorXd beta = solve_riesz_sq(basis, config.lambda);
        return RieszFit(config, functional, std::move(map), RieszParameterization::Linear,
                        std::move(beta));
    }

    CanonicalProblem pr;
    pr.design = basis.columns;
    pr.offset = basis.offset_vals;
    pr.target = column_means(basis.counterfactual_m);
    pr.lambda = config.lambda;
    pr.n_total = static_cast<double>(data.n());
    pr.loss = LinkLoss::Squared;
    CanonicalSolution sol = minimize_canonical(pr, config.tol, config.max_iter);
    return RieszFit(config, functional, std::move(map), RieszParameterization::Linear,
                    std::move(sol.beta), 0.0, Eigen::Vector2d::Zero(), sol.iterations,
                    sol.gradient_norm);
}

RieszFit fit_riesz_generalized(const Dataset& data, Functional functional,
                               std::shared_ptr<const FeatureMap> map, const RieszConfig& config) {
    config.validate();
    if (config.loss == RieszLoss::Squared) {
        throw Error("fit_riesz_generalized needs the UKL or BP loss");
    }
    data.require_both_arms("Riesz regression");

    const Eigen::MatrixXd psi = eval_covariate_basis(*map, data.z());
    const double n = static_cast<double>(data.n());
    const auto treated = rows_in_arm(data.d(), true);
    const auto control = rows_in_arm(data.d(), false);

    if (functional == Functional::AttMean) {
        const double pbar = treated_share(data);
        const Eigen::VectorXd target =
            psi.transpose() * (data.d() / pbar) / n;
        const double c = unit_weight_offset(config.loss);
        ArmSolve arm = solve_arm(psi(control, Eigen::all), c, target, n, config);
        return RieszFit(config, functional, std::move(map), RieszParameterization::ControlArm,
                        std::move(arm.beta), c, Eigen::Vector2d(arm.cap, arm.cap),
                        arm.iterations, arm.gradient_norm);
    }

    if (config.scheme == BalancingScheme::Covariate) {
        // One shared coefficient vector, signed by arm, so that the stationarity
        // condition is (1/n) sum alpha_i psi(z_i) = 0: covariate balance only.
        const Eigen::VectorXd sign = 2.0 * data.d().array() - 1.0;
        Eigen::MatrixXd design = psi.array().colwise() * sign.array();
        const double c = mirrored_offset(config.loss);
        CanonicalProblem pr;
        pr.design = std::move(design);
        pr.offset = Eigen::VectorXd::Constant(data.n(), c);
        pr.target = Eigen::VectorXd::Zero(psi.cols());
        pr.lambda = config.lambda;
        pr.n_total = n;
        pr.loss = link_of(config.loss);
        CanonicalSolution sol = minimize_canonical(pr, config.tol, config.max_iter);

        const Eigen::VectorXd u = pr.offset + pr.design * sol.beta;
        Eigen::Vector2d cap(c, c);
        bool seen[2] = {false, false};
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            const int arm = data.d()[i] > 0.5 ? 1 : 0;
            cap[arm] = seen[arm] ? std::max(cap[arm], u[i]) : u[i];
            seen[arm] = true;
        }
        return RieszFit(config, functional, std::move(map), RieszParameterization::Mirrored,
                        std::move(sol.beta), c, cap, sol.iterations, sol.gradient_norm);
    }

    const Eigen::VectorXd target = column_means(psi);
    const double c = unit_weight_offset(config.loss);
    ArmSolve arm1 = solve_arm(psi(treated, Eigen::all), c, target, n, config);
    ArmSolve arm0 = solve_arm(psi(control, Eigen::all), c, target, n, config);

    Eigen::VectorXd beta(2 * psi.cols());
    beta << arm1.beta, arm0.beta;
    return RieszFit(config, functional, std::move(map), RieszParameterization::PerArm,
                    std::move(beta), c, Eigen::Vector2d(arm0.cap, arm1.cap),
                    arm1.iterations + arm0.iterations,
                    std::max(arm1.gradient_norm, arm0.gradient_norm));
}

RieszFit fit_riesz(const Dataset& data, Functional functional,
                   std::shared_ptr<const FeatureMap> map, const RieszConfig& config) {
    if (config.loss == RieszLoss::Squared) {
        return fit_riesz_sq(data, functional, std::move(map), config);
    }
    return fit_riesz_generalized(data, functional, std::move(map), config);
}

ImbalanceReport ImbalanceGaps::summary() const {
    return {rms(covariate), max_abs(covariate), rms(regressor), max_abs(regressor)};
}

ImbalanceGaps imbalance_gaps(Functional functional, const Dataset& data,
                             const Eigen::VectorXd& alpha, const FeatureMap& diagnostic_map) {
    if (alpha.size() != data.n()) throw Error("alpha length does not match the sample");
    const Eigen::MatrixXd psi = diagnostic_map.features(data.z());
    const Eigen::Index m = psi.cols();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(data.n());

    ImbalanceGaps gaps;
    gaps.covariate.resize(m);
    gaps.regressor.resize(2 * m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::VectorXd col = psi.col(j);
        gaps.covariate[j] = balancing_gap(functional, data, alpha, ArmValues{col, col});
        gaps.regressor[j] = balancing_gap(functional, data, alpha, ArmValues{zero, col});
        gaps.regressor[m + j] = balancing_gap(functional, data, alpha, ArmValues{col, zero});
    }
    return gaps;
}

ImbalanceReport imbalance_report(const RieszFit& fit, const Dataset& data, Functional functional,
                                 const FeatureMap& diagnostic_map) {
    return imbalance_gaps(functional, data, fit.evaluate(data), diagnostic_map).summary();
}

}  // namespace regbal
