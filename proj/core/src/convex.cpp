#include "regbal/convex.hpp"

#include "regbal/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace regbal {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kShrink = 0.5;
constexpr int kMaxHalvings = 60;

Eigen::VectorXd linear_predictor(const CanonicalProblem& pr, const Eigen::VectorXd& beta) {
    return pr.offset + pr.design * beta;
}

bool feasible(LinkLoss loss, const Eigen::VectorXd& u) {
    for (Eigen::Index r = 0; r < u.size(); ++r) {
        if (!in_link_domain(loss, u[r])) return false;
    }
    return true;
}

double objective_at(const CanonicalProblem& pr, const Eigen::VectorXd& beta,
                    const Eigen::VectorXd& u) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < u.size(); ++r) total += link_value(pr.loss, u[r]);
    return total / pr.n_total - beta.dot(pr.target) + 0.5 * pr.lambda * beta.squaredNorm();
}

Eigen::VectorXd gradient_at(const CanonicalProblem& pr, const Eigen::VectorXd& beta,
                            const Eigen::VectorXd& u) {
    Eigen::VectorXd w(u.size());
    for (Eigen::Index r = 0; r < u.size(); ++r) w[r] = link_weight(pr.loss, u[r]);
    return pr.design.transpose() * w / pr.n_total - pr.target + pr.lambda * beta;
}

Eigen::VectorXd newton_direction(const CanonicalProblem& pr, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& grad) {
    Eigen::VectorXd curv(u.size());
    for (Eigen::Index r = 0; r < u.size(); ++r) curv[r] = link_curvature(pr.loss, u[r]);
    Eigen::MatrixXd hess = pr.design.transpose() * curv.asDiagonal() * pr.design / pr.n_total;
    hess.diagonal().array() += pr.lambda;

    const double scale = std::max(hess.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    double damping = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        Eigen::MatrixXd h = hess;
        h.diagonal().array() += damping;
        Eigen::LLT<Eigen::MatrixXd> llt(h);
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd dir = llt.solve(-grad);
            if (dir.allFinite()) return dir;
        }
        damping = damping == 0.0 ? 1e-12 * scale : damping * 100.0;
    }
    // Curvature vanished numerically; fall back to steepest descent.
    return -grad / scale;
}

}  // namespace

bool in_link_domain(LinkLoss loss, double u) {
    if (!std::isfinite(u)) return false;
    return loss != LinkLoss::Bp || u < 0.0;
}

double link_value(LinkLoss loss, double u) {
    switch (loss) {
        case LinkLoss::Squared:
            return 0.5 * u * u;
        case LinkLoss::Ukl:
            return std::exp(u);
        case LinkLoss::Bp:
            if (u >= 0.0) return std::numeric_limits<double>::infinity();
            return -std::log1p(-std::exp(u));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double link_weight(LinkLoss loss, double u) {
    switch (loss) {
        case LinkLoss::Squared:
            return u;
        case LinkLoss::Ukl:
            return std::exp(u);
        case LinkLoss::Bp:
            // e^u / (1 - e^u) = 1 / (e^{-u} - 1)
            return 1.0 / std::expm1(-u);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double link_curvature(LinkLoss loss, double u) {
    switch (loss) {
        case LinkLoss::Squared:
            return 1.0;
        case LinkLoss::Ukl:
            return std::exp(u);
        case LinkLoss::Bp: {
            const double w = link_weight(loss, u);
            return w * (1.0 + w);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double canonical_objective(const CanonicalProblem& problem, const Eigen::VectorXd& beta) {
    return objective_at(problem, beta, linear_predictor(problem, beta));
}

Eigen::VectorXd canonical_gradient(const CanonicalProblem& problem, const Eigen::VectorXd& beta) {
    return gradient_at(problem, beta, linear_predictor(problem, beta));
}

CanonicalSolution minimize_canonical(const CanonicalProblem& pr, double tol, int max_iter) {
    const Eigen::Index k = pr.design.cols();
    if (pr.offset.size() != pr.design.rows() || pr.target.size() != k) {
        throw Error("canonical problem has inconsistent dimensions");
    }
    if (!(pr.n_total > 0.0)) throw Error("canonical problem needs a positive sample size");

    CanonicalSolution sol;
    sol.beta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd u = linear_predictor(pr, sol.beta);
    if (!feasible(pr.loss, u)) throw Error("starting point lies outside the link domain");

    double f = objective_at(pr, sol.beta, u);
    Eigen::VectorXd grad = gradient_at(pr, sol.beta, u);
    sol.gradient_norm = grad.lpNorm<Eigen::Infinity>();

    while (sol.gradient_norm > tol) {
        if (sol.iterations >= max_iter) {
            std::ostringstream msg;
            msg << "Riesz fit did not converge in " << max_iter
                << " iterations (gradient norm " << sol.gradient_norm << ")";
            throw ConvergenceError(msg.str(), sol.gradient_norm);
        }
        ++sol.iterations;

        const Eigen::VectorXd dir = newton_direction(pr, u, grad);
        const double slope = grad.dot(dir);
        const double floor = 1e-13 * std::max(1.0, std::abs(f));

        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h < kMaxHalvings && !accepted; ++h, step *= kShrink) {
            Eigen::VectorXd trial = sol.beta + step * dir;
            Eigen::VectorXd u_trial = linear_predictor(pr, trial);
            if (!feasible(pr.loss, u_trial)) continue;
            const double f_trial = objective_at(pr, trial, u_trial);
            if (!std::isfinite(f_trial)) continue;

            bool take = f_trial <= f + kArmijo * step * slope;
            Eigen::VectorXd g_trial;
            if (!take && f_trial - f <= floor) {
                // Objective differences are below rounding; rely on the gradient.
                g_trial = gradient_at(pr, trial, u_trial);
                take = g_trial.lpNorm<Eigen::Infinity>() < sol.gradient_norm;
            }
            if (take) {
                sol.beta = std::move(trial);
                u = std::move(u_trial);
                f = f_trial;
                grad = g_trial.size() == k ? std::move(g_trial) : gradient_at(pr, sol.beta, u);
                accepted = true;
            }
        }
        if (!accepted) {
            std::ostringstream msg;
            msg << "Riesz fit line search stalled (gradient norm " << sol.gradient_norm << ")";
            throw ConvergenceError(msg.str(), sol.gradient_norm);
        }
        sol.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    }
    return sol;
}

}  // namespace regbal
