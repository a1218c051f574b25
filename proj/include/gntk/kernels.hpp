#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gntk/graph.hpp"

namespace gntk {

// ---------------------------------------------------------------------------
// Kernel matrices
// ---------------------------------------------------------------------------

struct Provenance {
    enum class Kind { Analytic, MonteCarlo, Dynamic } kind = Kind::Analytic;
    long mc_width = 0;
    std::uint64_t mc_seed = 0;
    long time_step = 0;

    static Provenance analytic() { return {}; }
    static Provenance monte_carlo(long m, std::uint64_t seed) {
        return {Kind::MonteCarlo, m, seed, 0};
    }
    static Provenance dynamic(long t) { return {Kind::Dynamic, 0, 0, t}; }
    std::string describe() const;
};

/// Symmetric kernel Gram matrix. Construction mirrors the upper triangle so
/// the stored matrix is exactly symmetric.
struct KernelMatrix {
    Eigen::MatrixXd values;
    Provenance provenance;

    int size() const { return int(values.rows()); }

    static KernelMatrix from_upper(Eigen::MatrixXd upper, Provenance prov);

    double frobenius_distance(const KernelMatrix& other) const {
        return (values - other.values).norm();
    }

    /// Row-major CSV with a "# provenance: ..." header line.
    std::string to_csv() const;
    static KernelMatrix from_csv(const std::string& text);
};

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// P[w'x >= 0 and w'x' >= 0] for standard Gaussian w and unit vectors at the
/// given cosine: (pi - arccos(cos)) / (2 pi). The cosine is clamped to
/// [-1, 1]; NaN input is a domain error.
double coactivation_probability(double cos_angle);

struct ReluMoments {
    double sigma = 0.0;     // c_sigma * E[relu(a) relu(b)]
    double sigma_dot = 0.0; // c_sigma * E[step(a) step(b)]
    bool degenerate = false;
};

inline constexpr double kCSigma = 2.0;

/// Arc-cosine closed forms of the two Gaussian ReLU moments over a 2x2
/// covariance. With s = sqrt(L11 L22) and theta the angle of L12/s:
/// sigma = (s/pi)(sin + (pi-theta)cos), sigma_dot = (pi-theta)/pi.
/// s <= 1e-12 is treated as degenerate: sigma = 0 and sigma_dot evaluated at
/// cos = 0. A diagonal entry below -1e-12 is a domain error.
ReluMoments gauss_relu_moments(const Eigen::Matrix2d& lambda);

// ---------------------------------------------------------------------------
// Graph-level GNTK (single hidden layer)
// ---------------------------------------------------------------------------

/// k_gntk(G, H) over aggregated feature columns: sum over column pairs of
/// <x, x'> * coactivation(cos(x, x')). Zero columns contribute zero.
double gntk_graph_pair(const Eigen::MatrixXd& agg_g, const Eigen::MatrixXd& agg_h);

/// Aggregated columns of every sample in the dataset. Graph mode: one d x N_i
/// matrix per graph. Node mode: one single-column matrix per node, so the
/// node-level task reuses the graph-level machinery unchanged.
std::vector<Eigen::MatrixXd> dataset_samples(const GraphDataset& dataset, SelfLoopPolicy policy);

KernelMatrix gntk_gram_from_samples(const std::vector<Eigen::MatrixXd>& samples);

/// H^cts of the dataset (n x n in graph mode, N x N in node mode).
KernelMatrix gntk_gram(const GraphDataset& dataset, SelfLoopPolicy policy);

/// Test-to-train kernel vector.
Eigen::VectorXd gntk_cross(const Eigen::MatrixXd& test_sample,
                           const std::vector<Eigen::MatrixXd>& samples);

// ---------------------------------------------------------------------------
// Monte Carlo estimators
// ---------------------------------------------------------------------------

struct McKernel {
    KernelMatrix kernel;
    Eigen::MatrixXd stderrs; // per-entry standard error of the m-sample mean
};

/// Indicator-sum kernel entry at explicit weights:
/// (1/m) sum_r sum_{l1,l2} x'x * 1{w_r'x >= b} 1{w_r'x' >= b}.
/// This is the Monte Carlo GNTK entry and the dynamic kernel entry in one.
double indicator_pair_kernel(const Eigen::MatrixXd& weights, double bias,
                             const Eigen::MatrixXd& agg_g, const Eigen::MatrixXd& agg_h);

/// H^dis: unbiased m-sample estimate of H^cts. All entries share one set of
/// m Gaussian weight draws (the estimator is a Gram matrix of finite-width
/// gradients, so this is what keeps it PSD).
McKernel mc_gntk_gram(const GraphDataset& dataset, SelfLoopPolicy policy, long m,
                      std::uint64_t seed);

/// Monte Carlo estimate of the shifted-ReLU kernel (indicators at level b).
/// No closed form is attempted. b = 0 reproduces mc_gntk_gram exactly on the
/// same seed.
McKernel shifted_gntk_gram(const GraphDataset& dataset, SelfLoopPolicy policy, double bias,
                           long m, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Node-level multi-level GNTK recursion
// ---------------------------------------------------------------------------

struct NodeGntkStep {
    int level = 0;
    int layer = 0;
    Eigen::MatrixXd sigma;     // covariance after this combine
    Eigen::MatrixXd sigma_dot; // derivative covariance of this combine
};

struct NodeGntkResult {
    KernelMatrix kernel;
    std::vector<NodeGntkStep> steps; // one entry per combine, for inspection
};

struct NodeGntkOptions {
    int levels = 1;
    int layers = 1;
    /// The level-1 covariance/kernel init is the gram of *aggregated*
    /// columns, consistent with the network's first aggregate. Setting this
    /// computes the literal unaggregated raw-feature init instead, for
    /// comparison.
    bool strict_paper_init = false;
};

/// Runs the aggregate/combine covariance recursion and returns k^(L)_(R).
NodeGntkResult node_gntk(const Graph& graph, SelfLoopPolicy policy, const NodeGntkOptions& options);

}  // namespace gntk
