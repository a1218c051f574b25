#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gntk/spectral.hpp"
#include "oracles.hpp"

using namespace gntk;

TEST_CASE("lambda_extremes: identity, diagonal, 2x2") {
    const SpectralResult id = lambda_extremes(Eigen::MatrixXd::Identity(3, 3));
    CHECK(id.lambda_min == doctest::Approx(1.0));
    CHECK(id.lambda_max == doctest::Approx(1.0));

    Eigen::MatrixXd diag = Eigen::Vector3d(5, 2, 9).asDiagonal();
    const SpectralResult d = lambda_extremes(diag);
    CHECK(d.lambda_min == doctest::Approx(2.0));
    CHECK(d.lambda_max == doctest::Approx(9.0));

    Eigen::MatrixXd m(2, 2);
    m << 2, 1, 1, 2;
    const SpectralResult r = lambda_extremes(m);
    CHECK(r.lambda_min == doctest::Approx(1.0));
    CHECK(r.lambda_max == doctest::Approx(3.0));
    CHECK(r.residual <= 1e-8);
}

TEST_CASE("lambda_extremes handles zero and negative-definite matrices") {
    const SpectralResult zero = lambda_extremes(Eigen::MatrixXd::Zero(4, 4));
    CHECK(zero.lambda_min == 0.0);
    CHECK(zero.lambda_max == 0.0);

    Eigen::MatrixXd neg = -2.0 * Eigen::MatrixXd::Identity(3, 3);
    const SpectralResult r = lambda_extremes(neg);
    CHECK(r.lambda_min == doctest::Approx(-2.0));
    CHECK(r.lambda_max == doctest::Approx(-2.0));
}

TEST_CASE("lambda_extremes rejects asymmetric input") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(lambda_extremes(m), DataError);
}

TEST_CASE("lambda_extremes agrees with the dense eigendecomposition oracle") {
    Rng rng(19);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd a(5, 5);
        for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
        Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
        const Eigen::VectorXd eigs = oracles::eigenvalues_sym(sym);
        const SpectralResult r = lambda_extremes(sym);
        CHECK(r.lambda_min == doctest::Approx(eigs.minCoeff()).epsilon(1e-6));
        CHECK(r.lambda_max == doctest::Approx(eigs.maxCoeff()).epsilon(1e-6));
    }
}

TEST_CASE("lambda_extremes: permutation and positive scaling invariance") {
    Rng rng(20);
    Eigen::MatrixXd a(4, 4);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
    Eigen::MatrixXd sym = a * a.transpose();
    const SpectralResult base = lambda_extremes(sym);

    Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
    perm.setIdentity();
    std::swap(perm.indices()(0), perm.indices()(3));
    std::swap(perm.indices()(1), perm.indices()(2));
    const Eigen::MatrixXd permuted = perm * sym * perm.transpose();
    const SpectralResult after = lambda_extremes(permuted);
    CHECK(after.lambda_min == doctest::Approx(base.lambda_min).epsilon(1e-7));
    CHECK(after.lambda_max == doctest::Approx(base.lambda_max).epsilon(1e-7));

    const SpectralResult scaled = lambda_extremes(Eigen::MatrixXd(4.0 * sym));
    CHECK(scaled.lambda_min == doctest::Approx(4.0 * base.lambda_min).epsilon(1e-7));
}

TEST_CASE("check_separation_bound: singleton unit feature holds for any delta") {
    Eigen::MatrixXd h(1, 1);
    h << 0.5; // gntk diagonal of a unit feature
    const KernelMatrix k = KernelMatrix::from_upper(h, Provenance::analytic());
    const SeparationReport report = check_separation_bound(k, std::sqrt(2.0) - 1e-6, 1);
    CHECK(report.lambda_min == doctest::Approx(0.5));
    CHECK(report.holds);
}

TEST_CASE("check_separation_bound: repeated graph means degenerate separation") {
    Eigen::MatrixXd h(2, 2);
    h << 0.5, 0.5, 0.5, 0.5; // identical graphs, singular Gram
    const KernelMatrix k = KernelMatrix::from_upper(h, Provenance::analytic());
    const SeparationReport report = check_separation_bound(k, 0.0, 2);
    CHECK(report.bound == 0.0);
    CHECK(report.holds);
    CHECK(report.degenerate_separation);
}

TEST_CASE("check_shifted_bounds: b = 0 reduces to the separation bound plus upper slack") {
    Eigen::MatrixXd h(2, 2);
    h << 0.5, 0.1, 0.1, 0.5;
    const KernelMatrix k = KernelMatrix::from_upper(h, Provenance::analytic());
    const ShiftedBoundsReport report = check_shifted_bounds(k, 0.0, 0.5, 2, 0.0);
    CHECK(report.lower_bound == doctest::Approx(0.5 / 400.0));
    CHECK(report.upper_bound == doctest::Approx(1.0));
    CHECK(report.lower_holds);
    CHECK(report.upper_holds); // lambda_min = 0.4 <= 1
}

TEST_CASE("check_shifted_bounds: b = 2 diagonal sits under exp(-b^2/2)") {
    Eigen::MatrixXd h(1, 1);
    h << 0.02275; // P[g >= 2]
    const KernelMatrix k = KernelMatrix::from_upper(h, Provenance::analytic());
    const ShiftedBoundsReport report = check_shifted_bounds(k, 2.0, 0.5, 1, 0.0);
    CHECK(report.upper_bound == doctest::Approx(std::exp(-2.0)));
    CHECK(report.upper_holds);
}
