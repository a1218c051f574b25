#include "gntk/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gntk {

std::string Provenance::describe() const {
    switch (kind) {
        case Kind::Analytic: return "analytic";
        case Kind::MonteCarlo:
            return "monte_carlo(m=" + std::to_string(mc_width) +
                   ", seed=" + std::to_string(mc_seed) + ")";
        case Kind::Dynamic: return "dynamic(t=" + std::to_string(time_step) + ")";
    }
    return "unknown";
}

KernelMatrix KernelMatrix::from_upper(Eigen::MatrixXd upper, Provenance prov) {
    const Eigen::Index s = upper.rows();
    if (upper.cols() != s) throw DataError("kernel matrix must be square");
    for (Eigen::Index i = 0; i < s; ++i)
        for (Eigen::Index j = 0; j < i; ++j) upper(i, j) = upper(j, i);
    if (!upper.allFinite()) throw DataError("kernel matrix has non-finite entries");
    return KernelMatrix{std::move(upper), prov};
}

std::string KernelMatrix::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "# provenance: " << provenance.describe() << "\n";
    for (int i = 0; i < size(); ++i) {
        for (int j = 0; j < size(); ++j) {
            if (j) out << ",";
            out << values(i, j);
        }
        out << "\n";
    }
    return out.str();
}

KernelMatrix KernelMatrix::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::istringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("kernel CSV: no data rows");
    const Eigen::Index s = Eigen::Index(rows.size());
    Eigen::MatrixXd m(s, s);
    for (Eigen::Index i = 0; i < s; ++i) {
        if (Eigen::Index(rows[std::size_t(i)].size()) != s)
            throw DataError("kernel CSV: row " + std::to_string(i) + " has " +
                            std::to_string(rows[std::size_t(i)].size()) + " fields, expected " +
                            std::to_string(s));
        for (Eigen::Index j = 0; j < s; ++j) m(i, j) = rows[std::size_t(i)][std::size_t(j)];
    }
    // Tolerate roundoff from the text roundtrip, then resymmetrize.
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff()))
        throw DataError("kernel CSV: matrix is not symmetric");
    return from_upper(std::move(m), Provenance::analytic());
}

double coactivation_probability(double cos_angle) {
    if (std::isnan(cos_angle)) throw DataError("coactivation_probability: NaN cosine");
    return (M_PI - std::acos(clamp_cos(cos_angle))) / (2.0 * M_PI);
}

ReluMoments gauss_relu_moments(const Eigen::Matrix2d& lambda) {
    const double v1 = lambda(0, 0), v2 = lambda(1, 1);
    if (v1 < -1e-12 || v2 < -1e-12)
        throw DataError("gauss_relu_moments: covariance diagonal is negative (" +
                        std::to_string(v1) + ", " + std::to_string(v2) + ")");
    const double scale = std::sqrt(std::max(v1, 0.0) * std::max(v2, 0.0));
    ReluMoments moments;
    if (scale <= 1e-12) {
        moments.degenerate = true;
        moments.sigma = 0.0;
        moments.sigma_dot = kCSigma * (M_PI - std::acos(0.0)) / (2.0 * M_PI);
        return moments;
    }
    const double cos_theta = clamp_cos(lambda(0, 1) / scale);
    const double theta = std::acos(cos_theta);
    moments.sigma = kCSigma * scale * (std::sin(theta) + (M_PI - theta) * cos_theta) / (2.0 * M_PI);
    moments.sigma_dot = kCSigma * (M_PI - theta) / (2.0 * M_PI);
    return moments;
}

double gntk_graph_pair(const Eigen::MatrixXd& agg_g, const Eigen::MatrixXd& agg_h) {
    if (agg_g.rows() != agg_h.rows())
        throw DataError("gntk_graph_pair: feature dimensions differ (" +
                        std::to_string(agg_g.rows()) + " vs " + std::to_string(agg_h.rows()) + ")");
    const Eigen::VectorXd ng = agg_g.colwise().norm();
    const Eigen::VectorXd nh = agg_h.colwise().norm();
    double total = 0.0;
    for (Eigen::Index l1 = 0; l1 < agg_g.cols(); ++l1) {
        if (ng(l1) == 0.0) continue; // zero column: inner products vanish
        for (Eigen::Index l2 = 0; l2 < agg_h.cols(); ++l2) {
            if (nh(l2) == 0.0) continue;
            const double dot = agg_g.col(l1).dot(agg_h.col(l2));
            total += dot * coactivation_probability(dot / (ng(l1) * nh(l2)));
        }
    }
    return total;
}

std::vector<Eigen::MatrixXd> dataset_samples(const GraphDataset& dataset, SelfLoopPolicy policy) {
    dataset.validate();
    std::vector<Eigen::MatrixXd> samples;
    if (dataset.mode == RegressionMode::GraphLevel) {
        samples.reserve(dataset.graphs.size());
        for (const Graph& g : dataset.graphs) samples.push_back(aggregate_features(g, policy));
    } else {
        const Eigen::MatrixXd agg = aggregate_features(dataset.graphs.front(), policy);
        samples.reserve(std::size_t(agg.cols()));
        for (Eigen::Index u = 0; u < agg.cols(); ++u) samples.push_back(agg.col(u));
    }
    return samples;
}

KernelMatrix gntk_gram_from_samples(const std::vector<Eigen::MatrixXd>& samples) {
    const Eigen::Index n = Eigen::Index(samples.size());
    Eigen::MatrixXd gram(n, n);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> entries;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) entries.emplace_back(i, j);
    parallel_for(entries.size(), [&](std::size_t k) {
        const auto [i, j] = entries[k];
        gram(i, j) = gntk_graph_pair(samples[std::size_t(i)], samples[std::size_t(j)]);
    });
    return KernelMatrix::from_upper(std::move(gram), Provenance::analytic());
}

KernelMatrix gntk_gram(const GraphDataset& dataset, SelfLoopPolicy policy) {
    return gntk_gram_from_samples(dataset_samples(dataset, policy));
}

Eigen::VectorXd gntk_cross(const Eigen::MatrixXd& test_sample,
                           const std::vector<Eigen::MatrixXd>& samples) {
    Eigen::VectorXd cross(Eigen::Index(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i)
        cross(Eigen::Index(i)) = gntk_graph_pair(test_sample, samples[i]);
    return cross;
}

double indicator_pair_kernel(const Eigen::MatrixXd& weights, double bias,
                             const Eigen::MatrixXd& agg_g, const Eigen::MatrixXd& agg_h) {
    if (agg_g.rows() != weights.rows() || agg_h.rows() != weights.rows())
        throw DataError("indicator_pair_kernel: dimension mismatch");
    const Eigen::MatrixXd zg = weights.transpose() * agg_g; // m x Ng
    const Eigen::MatrixXd zh = weights.transpose() * agg_h; // m x Nh
    const Eigen::MatrixXd inner = agg_g.transpose() * agg_h;
    double total = 0.0;
    for (Eigen::Index r = 0; r < weights.cols(); ++r) {
        for (Eigen::Index l1 = 0; l1 < agg_g.cols(); ++l1) {
            if (zg(r, l1) < bias) continue;
            for (Eigen::Index l2 = 0; l2 < agg_h.cols(); ++l2)
                if (zh(r, l2) >= bias) total += inner(l1, l2);
        }
    }
    return total / double(weights.cols());
}

namespace {

/// Shared implementation of the two Monte Carlo grams. One pass over the m
/// weight draws; per-entry mean and standard error accumulated in one go.
McKernel indicator_gram(const GraphDataset& dataset, SelfLoopPolicy policy, double bias, long m,
                        std::uint64_t seed, Provenance prov) {
    if (m < 1) throw ConfigError("monte carlo gram: m must be >= 1");
    const std::vector<Eigen::MatrixXd> samples = dataset_samples(dataset, policy);
    const Eigen::Index n = Eigen::Index(samples.size());
    const int d = int(samples.front().rows());

    // Flatten all aggregated columns once.
    std::vector<Eigen::Index> offset(std::size_t(n) + 1, 0);
    for (Eigen::Index i = 0; i < n; ++i) offset[std::size_t(i) + 1] = offset[std::size_t(i)] + samples[std::size_t(i)].cols();
    const Eigen::Index total_cols = offset[std::size_t(n)];
    Eigen::MatrixXd columns(d, total_cols);
    for (Eigen::Index i = 0; i < n; ++i)
        columns.middleCols(offset[std::size_t(i)], samples[std::size_t(i)].cols()) = samples[std::size_t(i)];
    const Eigen::MatrixXd inner = columns.transpose() * columns;

    // One weight stream for the whole gram; draw order is w_1, ..., w_m,
    // each column filled top to bottom.
    Rng rng(mix_seed(seed, /*role=*/0x3C57));
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd w(d), z(total_cols);
    std::vector<char> active(static_cast<std::size_t>(total_cols), 0);
    for (long r = 0; r < m; ++r) {
        for (int c = 0; c < d; ++c) w(c) = rng.gaussian();
        z.noalias() = columns.transpose() * w;
        for (Eigen::Index c = 0; c < total_cols; ++c) active[std::size_t(c)] = z(c) >= bias;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j) {
                double entry = 0.0;
                for (Eigen::Index l1 = offset[std::size_t(i)]; l1 < offset[std::size_t(i) + 1]; ++l1) {
                    if (!active[std::size_t(l1)]) continue;
                    for (Eigen::Index l2 = offset[std::size_t(j)]; l2 < offset[std::size_t(j) + 1]; ++l2)
                        if (active[std::size_t(l2)]) entry += inner(l1, l2);
                }
                sum(i, j) += entry;
                sum_sq(i, j) += entry * entry;
            }
    }

    Eigen::MatrixXd mean = sum / double(m);
    Eigen::MatrixXd se(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            const double var = std::max(0.0, sum_sq(i, j) / double(m) - mean(i, j) * mean(i, j));
            se(i, j) = se(j, i) = m > 1 ? std::sqrt(var / double(m - 1)) : 0.0;
        }
    return McKernel{KernelMatrix::from_upper(std::move(mean), prov), std::move(se)};
}

}  // namespace

McKernel mc_gntk_gram(const GraphDataset& dataset, SelfLoopPolicy policy, long m,
                      std::uint64_t seed) {
    return indicator_gram(dataset, policy, 0.0, m, seed, Provenance::monte_carlo(m, seed));
}

McKernel shifted_gntk_gram(const GraphDataset& dataset, SelfLoopPolicy policy, double bias, long m,
                           std::uint64_t seed) {
    if (bias < 0.0) throw ConfigError("shifted_gntk_gram: bias must be >= 0");
    return indicator_gram(dataset, policy, bias, m, seed, Provenance::monte_carlo(m, seed));
}

namespace {

void check_state(const Eigen::MatrixXd& sigma, int level, int layer) {
    const double scale = 1.0 + sigma.cwiseAbs().maxCoeff();
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InternalConsistencyError("node_gntk: covariance asymmetric at level " +
                                       std::to_string(level) + " layer " + std::to_string(layer));
    if (sigma.diagonal().minCoeff() < -1e-12 * scale)
        throw InternalConsistencyError("node_gntk: negative covariance diagonal at level " +
                                       std::to_string(level) + " layer " + std::to_string(layer));
}

}  // namespace

NodeGntkResult node_gntk(const Graph& graph, SelfLoopPolicy policy,
                         const NodeGntkOptions& options) {
    if (options.levels < 1 || options.layers < 1)
        throw ConfigError("node_gntk: levels and layers must be >= 1");
    graph.validate();
    const int n = graph.num_nodes;

    // Neighbor indicator (with optional self entry); aggregation of a kernel
    // matrix is the congruence M -> B M B'.
    Eigen::MatrixXd nbr = Eigen::MatrixXd::Zero(n, n);
    for (int u = 0; u < n; ++u) {
        if (policy == SelfLoopPolicy::Include) nbr(u, u) = 1.0;
        for (int v : graph.adjacency[std::size_t(u)]) nbr(u, v) = 1.0;
    }

    const Eigen::MatrixXd raw_gram = graph.features.transpose() * graph.features;
    Eigen::MatrixXd sigma = options.strict_paper_init
                                ? raw_gram
                                : Eigen::MatrixXd(nbr * raw_gram * nbr.transpose());
    Eigen::MatrixXd kernel = sigma;

    NodeGntkResult result;
    for (int level = 1; level <= options.levels; ++level) {
        if (level > 1) {
            sigma = nbr * sigma * nbr.transpose();
            kernel = nbr * kernel * nbr.transpose();
        }
        for (int layer = 1; layer <= options.layers; ++layer) {
            check_state(sigma, level, layer);
            Eigen::MatrixXd new_sigma(n, n), sigma_dot(n, n);
            for (int u = 0; u < n; ++u)
                for (int v = u; v < n; ++v) {
                    Eigen::Matrix2d lambda;
                    lambda << sigma(u, u), sigma(u, v), sigma(v, u), sigma(v, v);
                    const ReluMoments mom = gauss_relu_moments(lambda);
                    new_sigma(u, v) = new_sigma(v, u) = mom.sigma;
                    sigma_dot(u, v) = sigma_dot(v, u) = mom.sigma_dot;
                }
            kernel = (kernel.array() * sigma_dot.array()).matrix() + new_sigma;
            sigma = new_sigma;
            result.steps.push_back(NodeGntkStep{level, layer, sigma, sigma_dot});
        }
    }
    result.kernel = KernelMatrix::from_upper(std::move(kernel), Provenance::analytic());
    return result;
}

}  // namespace gntk
