#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gntk/kernels.hpp"

namespace gntk {

/// Kernel regression problem: train Gram H, test-train kernel vector, labels,
/// multiplier kappa, and the explicit-Euler discretization (eta, T) of the
/// predictor-space gradient flow.
struct RegressionProblem {
    KernelMatrix gram;
    Eigen::VectorXd k_test;
    Eigen::VectorXd labels;
    double kappa = 1.0;
    double eta = 0.1;
    long steps = 0;

    void validate() const;
};

struct ExactSolution {
    double u_test_star = 0.0;     // k_test' H^{-1} Y
    Eigen::VectorXd u_star;       // train-side optimum, equal to Y
    double lambda_min = 0.0;      // smallest eigenvalue actually certified
};

/// k' H^{-1} Y through a symmetric positive-definite factorization (never an
/// explicit inverse). Refuses when lambda_min(H) <= lambda_floor; a negative
/// lambda_floor means the default 1e-10 * trace(H). kappa cancels and does
/// not appear.
ExactSolution solve_exact(const KernelMatrix& gram, const Eigen::VectorXd& k_test,
                          const Eigen::VectorXd& labels, double lambda_floor = -1.0);

struct RegressionStep {
    long t = 0;
    Eigen::VectorXd u;  // training predictor u(t)
    double u_test = 0.0;
};

struct RegressionTrace {
    std::vector<RegressionStep> steps; // t = 0, 1, ..., T (step 0 is all-zero)

    const RegressionStep& at(long t) const;
    const RegressionStep& final() const { return steps.back(); }
};

/// Explicit Euler on the predictor-space flow
///   u(t+1)      = u(t) + eta kappa^2 H (Y - u(t)),
///   u_test(t+1) = u_test(t) + eta kappa^2 k_test' (Y - u(t)),
/// from u(0) = 0, u_test(0) = 0. The simulation lives entirely in the
/// (n+1)-dimensional predictor space; the feature-space weights are never
/// materialized. Requires eta kappa^2 lambda_max(H) < 2 up front.
RegressionTrace iterate_regression(const RegressionProblem& problem);

/// |u_test(T) - u_test*|, the scalar gap the equivalence harness consumes.
double regression_gap(const RegressionProblem& problem);

}  // namespace gntk
