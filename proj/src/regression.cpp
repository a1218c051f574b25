#include "gntk/regression.hpp"

#include <Eigen/Cholesky>

#include "gntk/spectral.hpp"

namespace gntk {

void RegressionProblem::validate() const {
    const Eigen::Index n = gram.values.rows();
    if (labels.size() != n || k_test.size() != n)
        throw ConfigError("regression problem: H is " + std::to_string(n) + "x" +
                          std::to_string(n) + " but |Y|=" + std::to_string(labels.size()) +
                          ", |k_test|=" + std::to_string(k_test.size()));
    if (kappa <= 0.0) throw ConfigError("regression problem: kappa must be > 0");
    if (eta <= 0.0) throw ConfigError("regression problem: eta must be > 0");
    if (steps < 0) throw ConfigError("regression problem: T must be >= 0");
}

ExactSolution solve_exact(const KernelMatrix& gram, const Eigen::VectorXd& k_test,
                          const Eigen::VectorXd& labels, double lambda_floor) {
    const Eigen::Index n = gram.values.rows();
    if (labels.size() != n || k_test.size() != n)
        throw ConfigError("solve_exact: size mismatch between H, Y, k_test");
    if (lambda_floor < 0.0) lambda_floor = 1e-10 * gram.values.trace();
    const double lambda_min = lambda_extremes(gram).lambda_min;
    if (lambda_min <= lambda_floor)
        throw SingularKernelError(lambda_min,
                                  "solve_exact: lambda_min(H) = " + std::to_string(lambda_min) +
                                      " <= floor " + std::to_string(lambda_floor) +
                                      "; the Lambda_0 > 0 hypothesis is violated");
    const Eigen::LLT<Eigen::MatrixXd> llt(gram.values);
    if (llt.info() != Eigen::Success)
        throw SingularKernelError(lambda_min, "solve_exact: Cholesky factorization failed");
    ExactSolution solution;
    solution.u_test_star = k_test.dot(llt.solve(labels));
    solution.u_star = labels; // the train-side optimum interpolates exactly
    solution.lambda_min = lambda_min;
    return solution;
}

const RegressionStep& RegressionTrace::at(long t) const {
    for (const RegressionStep& s : steps)
        if (s.t == t) return s;
    throw ConfigError("regression trace: no record for step " + std::to_string(t));
}

RegressionTrace iterate_regression(const RegressionProblem& problem) {
    problem.validate();
    const double lambda_max = lambda_extremes(problem.gram).lambda_max;
    const double step_gain = problem.eta * problem.kappa * problem.kappa;
    if (step_gain * lambda_max >= 2.0)
        throw ConfigError("iterate_regression: eta kappa^2 lambda_max = " +
                          std::to_string(step_gain * lambda_max) +
                          " >= 2 (explicit Euler unstable); reduce eta");

    const Eigen::Index n = problem.labels.size();
    RegressionTrace trace;
    trace.steps.reserve(std::size_t(problem.steps) + 1);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    double u_test = 0.0;
    trace.steps.push_back(RegressionStep{0, u, u_test});
    for (long t = 1; t <= problem.steps; ++t) {
        const Eigen::VectorXd residual = problem.labels - u;
        u += step_gain * (problem.gram.values * residual);
        u_test += step_gain * problem.k_test.dot(residual);
        trace.steps.push_back(RegressionStep{t, u, u_test});
    }
    return trace;
}

double regression_gap(const RegressionProblem& problem) {
    const ExactSolution exact = solve_exact(problem.gram, problem.k_test, problem.labels);
    const RegressionTrace trace = iterate_regression(problem);
    return std::abs(trace.final().u_test - exact.u_test_star);
}

}  // namespace gntk
