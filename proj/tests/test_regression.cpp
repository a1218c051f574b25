#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gntk/regression.hpp"
#include "oracles.hpp"

using namespace gntk;

namespace {

KernelMatrix kernel_of(const Eigen::MatrixXd& m) {
    return KernelMatrix::from_upper(m, Provenance::analytic());
}

}  // namespace

TEST_CASE("solve_exact on diagonal systems") {
    Eigen::VectorXd y(2), k(2);
    y << 3, 7;
    k << 1, 0;
    const ExactSolution a = solve_exact(kernel_of(Eigen::MatrixXd::Identity(2, 2)), k, y);
    CHECK(a.u_test_star == doctest::Approx(3.0));
    CHECK(a.u_star == y);

    k << 1, 1;
    y << 2, 2;
    const ExactSolution b =
        solve_exact(kernel_of(2.0 * Eigen::MatrixXd::Identity(2, 2)), k, y);
    CHECK(b.u_test_star == doctest::Approx(2.0));
}

TEST_CASE("solve_exact matches the dense elimination oracle") {
    Eigen::MatrixXd h(2, 2);
    h << 2, 1, 1, 2;
    Eigen::VectorXd k(2), y(2);
    k << 1, 0;
    y << 1, 1;
    const ExactSolution s = solve_exact(kernel_of(h), k, y);
    CHECK(s.u_test_star == doctest::Approx(1.0 / 3.0));
    CHECK(s.u_test_star == doctest::Approx(k.dot(oracles::solve_dense(h, y))));

    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd a(4, 4);
        for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
        const Eigen::MatrixXd spd =
            a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(4, 4);
        Eigen::VectorXd kt(4), yy(4);
        for (int i = 0; i < 4; ++i) {
            kt(i) = rng.gaussian();
            yy(i) = rng.gaussian();
        }
        const ExactSolution sol = solve_exact(kernel_of(spd), kt, yy);
        CHECK(sol.u_test_star ==
              doctest::Approx(kt.dot(oracles::solve_dense(spd, yy))).epsilon(1e-9));
    }
}

TEST_CASE("solve_exact is linear in the labels") {
    Eigen::MatrixXd h(3, 3);
    h << 3, 1, 0, 1, 3, 1, 0, 1, 3;
    Eigen::VectorXd k(3), y(3);
    k << 0.5, 0.2, 0.1;
    y << 1, -2, 0.5;
    const double base = solve_exact(kernel_of(h), k, y).u_test_star;
    const double scaled = solve_exact(kernel_of(h), k, Eigen::VectorXd(-2.5 * y)).u_test_star;
    CHECK(scaled == doctest::Approx(-2.5 * base));
}

TEST_CASE("solve_exact refuses a singular kernel and names the eigenvalue") {
    Eigen::MatrixXd h(2, 2);
    h << 1, 1, 1, 1;
    Eigen::VectorXd k(2), y(2);
    k << 1, 0;
    y << 1, 1;
    try {
        solve_exact(kernel_of(h), k, y);
        FAIL("expected SingularKernelError");
    } catch (const SingularKernelError& e) {
        CHECK(std::abs(e.lambda_min) < 1e-10);
    }
}

TEST_CASE("iterate_regression: one step with H = I, eta = kappa = 1 lands on Y") {
    Eigen::VectorXd y(3), k(3);
    y << 0.3, -0.7, 2.0;
    k << 1, 0, 0;
    RegressionProblem p{kernel_of(Eigen::MatrixXd::Identity(3, 3)), k, y, 1.0, 1.0, 1};
    const RegressionTrace trace = iterate_regression(p);
    CHECK((trace.final().u - y).norm() < 1e-15);
    CHECK(regression_gap(p) == doctest::Approx(0.0));
}

TEST_CASE("iterate_regression: converges to Y and the exact test predictor") {
    Eigen::MatrixXd h(3, 3);
    h << 2.4, 0.3, 0, 0.3, 2.4, 0, 0, 0, 2.7;
    Eigen::VectorXd k(3), y(3);
    k << 0.5, 0.2, 0.1;
    y << 1.0, -0.5, 0.25;
    RegressionProblem p{kernel_of(h), k, y, 0.5, 1.0 / (0.25 * 2.7), 2000};
    const RegressionTrace trace = iterate_regression(p);
    CHECK((trace.final().u - y).norm() < 1e-10);
    const ExactSolution exact = solve_exact(p.gram, k, y);
    CHECK(std::abs(trace.final().u_test - exact.u_test_star) < 1e-10);
}

TEST_CASE("iterate_regression: residual contraction matches the eigen oracle") {
    Eigen::MatrixXd h(3, 3);
    h << 2.4, 0.3, 0, 0.3, 2.4, 0, 0, 0, 2.7;
    const Eigen::VectorXd eigs = oracles::eigenvalues_sym(h); // 2.1, 2.7, 2.7
    Eigen::VectorXd k(3), y(3);
    k << 0.5, 0.2, 0.1;
    y << 1.0, -0.5, 0.25;
    const double kappa = 0.5, eta = 1.0 / (kappa * kappa * eigs.maxCoeff());
    RegressionProblem p{kernel_of(h), k, y, kappa, eta, 40};
    const RegressionTrace trace = iterate_regression(p);
    const double expected = 1.0 - eta * kappa * kappa * eigs.minCoeff();
    for (long t = 5; t < 12; ++t) {
        const double ratio = (trace.at(t + 1).u - y).norm() / (trace.at(t).u - y).norm();
        CHECK(std::abs(ratio - expected) <= 0.15 * expected);
    }
}

TEST_CASE("iterate_regression: residual norm is non-increasing at stable eta") {
    Rng rng(37);
    Eigen::MatrixXd a(4, 4);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
    const Eigen::MatrixXd h = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd k(4), y(4);
    for (int i = 0; i < 4; ++i) {
        k(i) = rng.gaussian();
        y(i) = rng.gaussian();
    }
    const double lmax = oracles::eigenvalues_sym(h).maxCoeff();
    RegressionProblem p{kernel_of(h), k, y, 0.3, 1.0 / (0.09 * lmax), 60};
    const RegressionTrace trace = iterate_regression(p);
    for (std::size_t i = 1; i < trace.steps.size(); ++i)
        CHECK((trace.steps[i].u - y).norm() <= (trace.steps[i - 1].u - y).norm() + 1e-14);
}

TEST_CASE("iterate_regression: simultaneous permutation leaves the test prediction unchanged") {
    Eigen::MatrixXd h(3, 3);
    h << 3, 0.5, 0.2, 0.5, 2.5, 0.1, 0.2, 0.1, 2.0;
    Eigen::VectorXd k(3), y(3);
    k << 0.4, 0.3, 0.2;
    y << 1, 2, 3;
    RegressionProblem p{kernel_of(h), k, y, 0.5, 0.2, 50};
    const double base = iterate_regression(p).final().u_test;

    Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
    perm.setIdentity();
    std::swap(perm.indices()(0), perm.indices()(2));
    RegressionProblem q{kernel_of(perm * h * perm.transpose()), perm * k, perm * y, 0.5, 0.2, 50};
    CHECK(iterate_regression(q).final().u_test == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("iterate_regression rejects an unstable step size up front") {
    Eigen::VectorXd k(2), y(2);
    k << 1, 0;
    y << 1, 1;
    RegressionProblem p{kernel_of(4.0 * Eigen::MatrixXd::Identity(2, 2)), k, y, 1.0, 0.55, 10};
    CHECK_THROWS_AS(iterate_regression(p), ConfigError);
}

TEST_CASE("regression_gap: T = 0 gives |u_test_star|; long runs close the gap") {
    Eigen::MatrixXd h(3, 3);
    h << 2.4, 0.3, 0, 0.3, 2.4, 0, 0, 0, 2.7;
    Eigen::VectorXd k(3), y(3);
    k << 0.5, 0.2, 0.1;
    y << 1.0, -0.5, 0.25;
    RegressionProblem p{kernel_of(h), k, y, 0.5, 0.5, 0};
    const ExactSolution exact = solve_exact(p.gram, k, y);
    CHECK(regression_gap(p) == doctest::Approx(std::abs(exact.u_test_star)));

    p.steps = 400;
    p.eta = 1.0 / (0.25 * 2.7);
    CHECK(regression_gap(p) <= 1e-8);
}
