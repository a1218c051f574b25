#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gntk/graph.hpp"
#include "gntk/kernels.hpp"

namespace gntk {

/// Multi-level, multi-layer node network: L levels of [aggregate, then R
/// combine layers f = sqrt(c_sigma/m) relu(W f)]. The first combine of level
/// one is m x d; every other combine is m x m. c_sigma is fixed to 2 and
/// lives in the forward pass, not in the weight variance.
struct MultiNet {
    int levels = 1;
    int layers = 1;
    int width = 1;
    std::vector<Eigen::MatrixXd> weights; // index (level-1)*layers + (layer-1)

    const Eigen::MatrixXd& weight(int level, int layer) const {
        return weights[std::size_t((level - 1) * layers + (layer - 1))];
    }
    void validate(int dim) const;
};

/// Weights i.i.d. standard Gaussian, drawn layer by layer in (level, layer)
/// order, each matrix column-major.
MultiNet init_multinet(int dim, int levels, int layers, int width, std::uint64_t seed);

/// Per-node forward activations: z = pre-activation, g = sqrt(c_sigma/m) relu(z).
struct MultiNetTrace {
    std::vector<Eigen::MatrixXd> level_inputs;       // [level]: (d or m) x N
    std::vector<std::vector<Eigen::MatrixXd>> pre;   // [level][layer]: m x N
    std::vector<std::vector<Eigen::MatrixXd>> act;   // [level][layer]: m x N
    const Eigen::MatrixXd& output() const { return act.back().back(); }
};

MultiNetTrace multinet_forward(const MultiNet& net, const Graph& graph, SelfLoopPolicy policy);

/// f^(L)_(R): m x N output columns.
Eigen::MatrixXd forward_multilayer(const MultiNet& net, const Graph& graph, SelfLoopPolicy policy);

struct EmpiricalNtkOptions {
    /// Number of Rademacher probe vectors for the gradient-gram part.
    /// 0 computes the exact coordinate sum (identity probes; O(m) memory per
    /// backward state times width, only sensible for small m).
    int probes = 0;
    std::uint64_t seed = 0;
};

/// Finite-width estimate of the node-level kernel: the output gram
/// <f(u), f(u')> plus the gradient gram sum_k <df_k(u)/dTheta, df_k(u')/dTheta>
/// over every weight matrix. The gradient part is either exact (probes = 0)
/// or an unbiased Hutchinson estimate from seeded Rademacher probes. Both
/// parts are Gram matrices of concrete vectors, so the result is symmetric
/// PSD by construction, and converges to node_gntk's k^(L)_(R) as the width
/// grows.
KernelMatrix empirical_ntk_node(const MultiNet& net, const Graph& graph, SelfLoopPolicy policy,
                                const EmpiricalNtkOptions& options = {});

}  // namespace gntk
