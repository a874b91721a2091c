#pragma once

#include <Eigen/Dense>
#include <vector>

#include "huberboot/dataset.hpp"

namespace huberboot {

struct SolverConfig {
    double grad_tol = 1e-8;   // relative to 1 + ||X^T |y|||_inf
    int max_iter = 100;
    double armijo_c = 1e-4;
    double backtrack = 0.5;   // step shrink factor
    double min_step = 1e-12;  // line search gives up below this
    bool record_trace = false;
};

struct FitResult {
    Eigen::VectorXd theta;
    Eigen::VectorXd residuals;  // y - x * theta at the returned theta
    double objective = 0.0;     // (weighted) Huber objective at theta
    double grad_norm = 0.0;     // sup norm of the gradient at theta
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // objective after each accepted step, if recorded
};

// Sum of w_i * huber_loss(y_i - x_i' theta, tau). Pass weights = nullptr for
// the unweighted sum.
double huber_objective(const Dataset& data, const Eigen::VectorXd& theta,
                       double tau, const Eigen::VectorXd* weights = nullptr);

// Gradient of the objective above in theta:
//   sum_i w_i * [ -psi_tau(y_i - x_i' theta) ] * x_i.
Eigen::VectorXd huber_gradient(const Dataset& data, const Eigen::VectorXd& theta,
                               double tau, const Eigen::VectorXd* weights = nullptr);

// Generalized Hessian: sum over residuals inside [-tau, tau] of w_i x_i x_i'.
Eigen::MatrixXd huber_hessian(const Dataset& data, const Eigen::VectorXd& theta,
                              double tau, const Eigen::VectorXd* weights = nullptr);

// Minimizes the Huber objective by damped semismooth Newton descent.
// Newton steps use a Cholesky factorization of the generalized Hessian and
// fall back to plain gradient steps whenever the factorization fails; an
// Armijo backtracking line search guards both branches. Starts from the
// least-squares solution unless an explicit init is given.
FitResult fit_huber(const Dataset& data, double tau, const SolverConfig& config = {},
                    const Eigen::VectorXd* weights = nullptr,
                    const Eigen::VectorXd* init = nullptr);

// Ordinary least squares via column-pivoted QR. Throws singular_matrix_error
// when the design is rank deficient.
Eigen::VectorXd fit_ols(const Dataset& data);

// One-dimensional Huber location: solves sum_i psi_tau(v_i - mu) = 0.
double huber_location(const Eigen::VectorXd& values, double tau,
                      const SolverConfig& config = {});

}  // namespace huberboot
