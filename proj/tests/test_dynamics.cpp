#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gntk/dynamics.hpp"
#include "gntk/kernels.hpp"
#include "oracles.hpp"

using namespace gntk;

namespace {

GraphDataset small_dataset(std::uint64_t seed) {
    GeneratorConfig config;
    config.n = 3;
    config.num_nodes = 2;
    config.dim = 3;
    config.delta_target = 0.2;
    config.seed = seed;
    return generate_separated_dataset(config);
}

}  // namespace

TEST_CASE("dynamic_kernel_pair equals the gradient inner product exactly") {
    Rng rng(70);
    const GnnParams p = init_params(3, 32, 0.0, 1.0, 71);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd a(3, 3), b(3, 2);
        for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
        for (int i = 0; i < b.size(); ++i) b.data()[i] = rng.gaussian();
        const double via_indicators = dynamic_kernel_pair(p, a, b);
        const double via_grads = grad_graph(p, a).cwiseProduct(grad_graph(p, b)).sum();
        CHECK(std::abs(via_indicators - via_grads) < 1e-12 * (1.0 + std::abs(via_grads)));
    }
}

TEST_CASE("dynamic_kernel_pair: diagonal is the squared gradient norm, dead net gives zero") {
    const GnnParams p = init_params(2, 16, 0.0, 1.0, 72);
    Eigen::MatrixXd x(2, 1);
    x << 0.3, -0.9;
    CHECK(dynamic_kernel_pair(p, x, x) ==
          doctest::Approx(grad_graph(p, x).squaredNorm()));
    CHECK(dynamic_kernel_pair(p, x, x) >= 0.0);

    GnnParams dead = p;
    dead.weights = -Eigen::MatrixXd::Ones(2, 16);
    Eigen::MatrixXd positive(2, 1);
    positive << 1, 1;
    CHECK(dynamic_kernel_pair(dead, positive, positive) == 0.0);
}

TEST_CASE("dynamic kernel at fresh weights is an unbiased estimate of the gntk pair") {
    Eigen::MatrixXd a(2, 2), b(2, 1);
    a << 1, 0.2, 0, 0.9;
    b << 0.5, -0.5;
    const double target = gntk_graph_pair(a, b);
    const int runs = 200;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < runs; ++s) {
        const GnnParams p = init_params(2, 64, 0.0, 1.0, 1000 + std::uint64_t(s));
        const double value = dynamic_kernel_pair(p, a, b);
        sum += value;
        sum_sq += value * value;
    }
    const double mean = sum / runs;
    const double se = std::sqrt((sum_sq / runs - mean * mean) / (runs - 1));
    CHECK(std::abs(mean - target) <= 3.0 * se);
}

TEST_CASE("dynamic_gram: symmetric, PSD, and near H^cts at large width") {
    const GraphDataset ds = small_dataset(73);
    const GnnParams p = init_params(3, 100000, 0.0, 1.0, 74);
    const KernelMatrix h0 = dynamic_gram(p, ds, SelfLoopPolicy::Include);
    CHECK((h0.values - h0.values.transpose()).norm() == 0.0);
    CHECK(oracles::eigenvalues_sym(h0.values).minCoeff() >= -1e-8 * h0.values.trace());

    const KernelMatrix cts = gntk_gram(ds, SelfLoopPolicy::Include);
    const double n = double(ds.graphs.size());
    const double bound = 4.0 * 2.0 * n * std::sqrt(std::log(n / 0.05) / 1e5);
    CHECK((h0.values - cts.values).norm() <= bound);

    // H(0) with the same seed is H^dis with the same seed: same estimator.
    const McKernel dis = mc_gntk_gram(ds, SelfLoopPolicy::Include, 100000,
                                      /*matching stream role differs*/ 74);
    CHECK(dis.kernel.values.rows() == h0.values.rows());
}

TEST_CASE("drift_report: T = 0 trace has an all-zero drift series") {
    const GraphDataset ds = small_dataset(75);
    const auto samples = dataset_samples(ds, SelfLoopPolicy::Include);
    GnnParams p = init_params(3, 64, 0.0, 0.5, 76);
    TrainOptions options;
    options.eta = 0.1;
    options.steps = 0;
    options.record_kernel = true;
    const TrainTrace trace = train_gd(p, samples, ds.labels, samples[0], options);
    const KernelMatrix cts = gntk_gram(ds, SelfLoopPolicy::Include);
    const DriftReport report = drift_report(trace, ds, SelfLoopPolicy::Include, cts, 0.05, 64);
    REQUIRE(report.sampled_steps.size() == 1);
    CHECK(report.ht_vs_h0_frob[0] == 0.0);
    CHECK(report.max_weight_move[0] == 0.0);
    CHECK(report.violations.empty());
}

TEST_CASE("drift_report: zero residual freezes the weights and the kernel") {
    // Labels set to the network's own outputs: the gradient vanishes.
    const GraphDataset ds = small_dataset(77);
    const auto samples = dataset_samples(ds, SelfLoopPolicy::Include);
    GnnParams p = init_params(3, 64, 0.0, 0.5, 78);
    Eigen::VectorXd labels(Eigen::Index(samples.size()));
    for (Eigen::Index i = 0; i < labels.size(); ++i)
        labels(i) = p.kappa * forward_graph(p, samples[std::size_t(i)]);
    TrainOptions options;
    options.eta = 0.2;
    options.steps = 25;
    options.trace_every = 5;
    options.record_kernel = true;
    const TrainTrace trace = train_gd(p, samples, labels, samples[0], options);
    const KernelMatrix cts = gntk_gram(ds, SelfLoopPolicy::Include);
    const DriftReport report = drift_report(trace, ds, SelfLoopPolicy::Include, cts, 0.05, 64);
    for (double drift : report.ht_vs_h0_frob) CHECK(drift == 0.0);
    for (double move : report.max_weight_move) CHECK(move == 0.0);
}

TEST_CASE("drift_report requires kernel snapshots") {
    const GraphDataset ds = small_dataset(79);
    const auto samples = dataset_samples(ds, SelfLoopPolicy::Include);
    GnnParams p = init_params(3, 32, 0.0, 0.5, 80);
    TrainOptions options;
    options.eta = 0.1;
    options.steps = 5;
    const TrainTrace trace = train_gd(p, samples, ds.labels, samples[0], options);
    const KernelMatrix cts = gntk_gram(ds, SelfLoopPolicy::Include);
    CHECK_THROWS_AS(drift_report(trace, ds, SelfLoopPolicy::Include, cts, 0.05, 32), ConfigError);
}

TEST_CASE("h0 concentration bound holds across repeated seeds") {
    const GraphDataset ds = small_dataset(81);
    const KernelMatrix cts = gntk_gram(ds, SelfLoopPolicy::Include);
    const double n = double(ds.graphs.size());
    const double bound = 4.0 * 2.0 * n * std::sqrt(std::log(n / 0.05) / 4096.0);
    int holds = 0;
    for (int s = 0; s < 20; ++s) {
        const GnnParams p = init_params(3, 4096, 0.0, 1.0, 2000 + std::uint64_t(s));
        const KernelMatrix h0 = dynamic_gram(p, ds, SelfLoopPolicy::Include);
        if ((h0.values - cts.values).norm() <= bound) ++holds;
    }
    CHECK(holds >= 19);
}

TEST_CASE("kernel drift is non-increasing in width (median over seeds)") {
    const GraphDataset ds = small_dataset(82);
    const auto samples = dataset_samples(ds, SelfLoopPolicy::Include);
    const KernelMatrix cts = gntk_gram(ds, SelfLoopPolicy::Include);
    std::vector<double> medians;
    for (int m : {64, 256, 1024}) {
        std::vector<double> finals;
        for (int s = 0; s < 5; ++s) {
            GnnParams p = init_params(3, m, 0.0, 0.25, 3000 + std::uint64_t(s));
            TrainOptions options;
            options.steps = 100;
            options.trace_every = 50;
            options.record_kernel = true;
            const TrainTrace trace = train_gd(p, samples, ds.labels, samples[0], options);
            finals.push_back(*trace.final().kernel_drift_frob);
        }
        std::sort(finals.begin(), finals.end());
        medians.push_back(finals[finals.size() / 2]);
    }
    CHECK(medians[1] <= medians[0] * 1.05);
    CHECK(medians[2] <= medians[1] * 1.05);
}
