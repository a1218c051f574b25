#include "gntk/multinet.hpp"

#include <cmath>
#include <map>

namespace gntk {

namespace {

/// Batched Box-Muller fill. Uniform pairs are consumed per Gaussian pair in
/// a fixed order; the trig transforms run vectorized on whole columns.
void gaussian_fill(Rng& rng, Eigen::MatrixXd& out) {
    const Eigen::Index count = out.size();
    const Eigen::Index pairs = (count + 1) / 2;
    Eigen::ArrayXd u1(pairs), u2(pairs);
    for (Eigen::Index i = 0; i < pairs; ++i) {
        double a = rng.uniform();
        while (a <= 0.0) a = rng.uniform();
        u1(i) = a;
        u2(i) = rng.uniform();
    }
    const Eigen::ArrayXd radius = (-2.0 * u1.log()).sqrt();
    const Eigen::ArrayXd angle = 2.0 * M_PI * u2;
    const Eigen::ArrayXd first = radius * angle.cos();
    const Eigen::ArrayXd second = radius * angle.sin();
    double* data = out.data();
    for (Eigen::Index i = 0; i < pairs; ++i) {
        data[2 * i] = first(i);
        if (2 * i + 1 < count) data[2 * i + 1] = second(i);
    }
}

}  // namespace

void MultiNet::validate(int dim) const {
    if (levels < 1 || layers < 1 || width < 1)
        throw ConfigError("multinet: levels, layers, width must be >= 1");
    if (int(weights.size()) != levels * layers)
        throw ConfigError("multinet: expected " + std::to_string(levels * layers) +
                          " weight matrices, have " + std::to_string(weights.size()));
    for (int l = 1; l <= levels; ++l)
        for (int r = 1; r <= layers; ++r) {
            const Eigen::MatrixXd& w = weight(l, r);
            const int expected_in = (l == 1 && r == 1) ? dim : width;
            if (int(w.rows()) != width || int(w.cols()) != expected_in)
                throw ConfigError("multinet: weight (" + std::to_string(l) + "," +
                                  std::to_string(r) + ") is " + std::to_string(w.rows()) + "x" +
                                  std::to_string(w.cols()) + ", expected " +
                                  std::to_string(width) + "x" + std::to_string(expected_in));
        }
}

MultiNet init_multinet(int dim, int levels, int layers, int width, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("multinet: dim must be >= 1");
    MultiNet net;
    net.levels = levels;
    net.layers = layers;
    net.width = width;
    Rng rng(mix_seed(seed, /*role=*/0x2113));
    for (int l = 1; l <= levels; ++l)
        for (int r = 1; r <= layers; ++r) {
            const int in = (l == 1 && r == 1) ? dim : width;
            Eigen::MatrixXd w(width, in);
            gaussian_fill(rng, w);
            net.weights.push_back(std::move(w));
        }
    net.validate(dim);
    return net;
}

MultiNetTrace multinet_forward(const MultiNet& net, const Graph& graph, SelfLoopPolicy policy) {
    net.validate(graph.feature_dim());
    graph.validate();
    const int n = graph.num_nodes;
    const double scale = std::sqrt(kCSigma / double(net.width));

    auto aggregate_columns = [&](const Eigen::MatrixXd& cols) {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(cols.rows(), n);
        for (int u = 0; u < n; ++u) {
            if (policy == SelfLoopPolicy::Include) out.col(u) = cols.col(u);
            for (int v : graph.adjacency[std::size_t(u)]) out.col(u) += cols.col(v);
        }
        return out;
    };

    MultiNetTrace trace;
    trace.level_inputs.reserve(std::size_t(net.levels));
    trace.pre.resize(std::size_t(net.levels));
    trace.act.resize(std::size_t(net.levels));
    Eigen::MatrixXd carry = graph.features;
    for (int l = 1; l <= net.levels; ++l) {
        trace.level_inputs.push_back(aggregate_columns(carry));
        const Eigen::MatrixXd* input = &trace.level_inputs.back();
        for (int r = 1; r <= net.layers; ++r) {
            Eigen::MatrixXd z = net.weight(l, r) * (*input);
            Eigen::MatrixXd g = scale * z.cwiseMax(0.0);
            trace.pre[std::size_t(l - 1)].push_back(std::move(z));
            trace.act[std::size_t(l - 1)].push_back(std::move(g));
            input = &trace.act[std::size_t(l - 1)].back();
        }
        carry = *input;
    }
    return trace;
}

Eigen::MatrixXd forward_multilayer(const MultiNet& net, const Graph& graph,
                                   SelfLoopPolicy policy) {
    return multinet_forward(net, graph, policy).output();
}

KernelMatrix empirical_ntk_node(const MultiNet& net, const Graph& graph, SelfLoopPolicy policy,
                                const EmpiricalNtkOptions& options) {
    const MultiNetTrace trace = multinet_forward(net, graph, policy);
    const int n = graph.num_nodes;
    const int m = net.width;
    const double scale = std::sqrt(kCSigma / double(m));

    // Probe matrix: identity for the exact coordinate sum, otherwise seeded
    // Rademacher columns with the 1/p estimator weight.
    const int p = options.probes > 0 ? options.probes : m;
    Eigen::MatrixXd probes;
    double probe_weight = 1.0;
    if (options.probes > 0) {
        probes.resize(m, p);
        Rng rng(mix_seed(options.seed, /*role=*/0x9B0B));
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < m; ++k) probes(k, j) = rng.sign();
        probe_weight = 1.0 / double(p);
    } else {
        probes = Eigen::MatrixXd::Identity(m, m);
    }

    // Output gram <f(u), f(u')>.
    const Eigen::MatrixXd& out = trace.output();
    Eigen::MatrixXd kernel = out.transpose() * out;

    // Backward states: per output node u, a map from node v to
    // d(probes' f(u)) / d z^(l,r)(v), an m x p matrix. Starting at the top
    // block only v = u is active; each aggregate crossing widens the set by
    // one neighborhood hop.
    std::vector<std::map<int, Eigen::MatrixXd>> delta(static_cast<std::size_t>(n));
    const Eigen::MatrixXd& z_top = trace.pre[std::size_t(net.levels - 1)].back();
    for (int u = 0; u < n; ++u) {
        Eigen::MatrixXd d0 = probes;
        for (int k = 0; k < m; ++k)
            if (z_top(k, u) < 0.0) d0.row(k).setZero();
        delta[std::size_t(u)][u] = scale * d0;
    }

    auto block_input = [&](int level, int layer, int v) {
        return layer > 1 ? trace.act[std::size_t(level - 1)][std::size_t(layer - 2)].col(v)
                         : trace.level_inputs[std::size_t(level - 1)].col(v);
    };

    for (int level = net.levels; level >= 1; --level) {
        for (int layer = net.layers; layer >= 1; --layer) {
            // Contribution of weight block (level, layer):
            // sum over probes of <delta(u,v), delta(u',v')> <in(v), in(v')>.
            for (int u = 0; u < n; ++u)
                for (int u2 = u; u2 < n; ++u2) {
                    double acc = 0.0;
                    for (const auto& [v, dv] : delta[std::size_t(u)])
                        for (const auto& [v2, dv2] : delta[std::size_t(u2)]) {
                            const double back = dv.cwiseProduct(dv2).sum();
                            if (back == 0.0) continue;
                            acc += back * block_input(level, layer, v)
                                              .dot(block_input(level, layer, v2));
                        }
                    kernel(u, u2) += probe_weight * acc;
                    if (u2 != u) kernel(u2, u) = kernel(u, u2);
                }

            if (level == 1 && layer == 1) break;

            // Descend into the next block down.
            const Eigen::MatrixXd& w = net.weight(level, layer);
            if (layer > 1) {
                const Eigen::MatrixXd& z_prev =
                    trace.pre[std::size_t(level - 1)][std::size_t(layer - 2)];
                for (int u = 0; u < n; ++u)
                    for (auto& [v, dv] : delta[std::size_t(u)]) {
                        Eigen::MatrixXd next = w.transpose() * dv;
                        for (int k = 0; k < m; ++k)
                            if (z_prev(k, v) < 0.0) next.row(k).setZero();
                        dv = scale * next;
                    }
            } else {
                // Aggregate crossing: push through W(level,1), then fan out
                // over the neighborhoods into level-1's last combine.
                const Eigen::MatrixXd& z_prev =
                    trace.pre[std::size_t(level - 2)][std::size_t(net.layers - 1)];
                for (int u = 0; u < n; ++u) {
                    std::map<int, Eigen::MatrixXd> next;
                    for (const auto& [v, dv] : delta[std::size_t(u)]) {
                        const Eigen::MatrixXd pushed = w.transpose() * dv;
                        auto add_to = [&](int wnode) {
                            auto [it, fresh] = next.try_emplace(wnode, Eigen::MatrixXd());
                            if (fresh) it->second = pushed;
                            else it->second += pushed;
                        };
                        if (policy == SelfLoopPolicy::Include) add_to(v);
                        for (int wnode : graph.adjacency[std::size_t(v)]) add_to(wnode);
                    }
                    for (auto& [wnode, dw] : next) {
                        for (int k = 0; k < m; ++k)
                            if (z_prev(k, wnode) < 0.0) dw.row(k).setZero();
                        dw *= scale;
                    }
                    delta[std::size_t(u)] = std::move(next);
                }
            }
        }
    }
    return KernelMatrix::from_upper(std::move(kernel), Provenance::monte_carlo(m, options.seed));
}

}  // namespace gntk
