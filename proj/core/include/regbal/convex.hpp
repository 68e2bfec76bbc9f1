#pragma once

#include <Eigen/Dense>

namespace regbal {

/// Convex generator h of a canonical-link loss. The weight is w = h'(u).
///   Squared:  h(u) = u^2 / 2,          w = u
///   Ukl:      h(u) = exp(u),           w = exp(u)
///   Bp:       h(u) = -log(1 - exp(u)), w = exp(u) / (1 - exp(u)),  domain u < 0
enum class LinkLoss { Squared, Ukl, Bp };

double link_value(LinkLoss loss, double u);       // h(u); +inf outside the domain
double link_weight(LinkLoss loss, double u);      // h'(u)
double link_curvature(LinkLoss loss, double u);   // h''(u)
bool in_link_domain(LinkLoss loss, double u);

/// Objective
///   L(beta) = (1/n_total) sum_r h(offset_r + design_r . beta) - beta . target
///             + (lambda / 2) |beta|^2
/// whose stationarity condition is
///   (1/n_total) sum_r w_r design_r = target - lambda beta.
struct CanonicalProblem {
    Eigen::MatrixXd design;
    Eigen::VectorXd offset;
    Eigen::VectorXd target;
    double lambda = 0.0;
    double n_total = 1.0;
    LinkLoss loss = LinkLoss::Squared;
};

struct CanonicalSolution {
    Eigen::VectorXd beta;
    double gradient_norm = 0.0;  // infinity norm at beta
    int iterations = 0;
};

double canonical_objective(const CanonicalProblem& problem, const Eigen::VectorXd& beta);
Eigen::VectorXd canonical_gradient(const CanonicalProblem& problem, const Eigen::VectorXd& beta);

/// Damped Newton descent from beta = 0 with Armijo backtracking (factor 0.5,
/// constant 1e-4). Steps that leave the link domain are shrunk. Throws
/// ConvergenceError when the gradient infinity norm is still above `tol`
/// after `max_iter` iterations, and Error when beta = 0 is infeasible.
CanonicalSolution minimize_canonical(const CanonicalProblem& problem, double tol, int max_iter);

}  // namespace regbal
