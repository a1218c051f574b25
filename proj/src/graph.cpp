#include "gntk/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace gntk {

using nlohmann::json;

std::string to_string(SelfLoopPolicy policy) {
    return policy == SelfLoopPolicy::Include ? "include" : "exclude";
}

SelfLoopPolicy self_loop_policy_from_string(const std::string& s) {
    if (s == "include") return SelfLoopPolicy::Include;
    if (s == "exclude") return SelfLoopPolicy::Exclude;
    throw ConfigError("unknown self-loop policy '" + s + "' (expected include|exclude)");
}

std::string to_string(RegressionMode mode) {
    return mode == RegressionMode::GraphLevel ? "graph" : "node";
}

RegressionMode regression_mode_from_string(const std::string& s) {
    if (s == "graph") return RegressionMode::GraphLevel;
    if (s == "node") return RegressionMode::NodeLevel;
    throw ConfigError("unknown mode '" + s + "' (expected graph|node)");
}

void Graph::validate() const {
    if (num_nodes <= 0) throw DataError("graph must have at least one node");
    if (int(features.cols()) != num_nodes)
        throw DataError("feature matrix has " + std::to_string(features.cols()) +
                        " columns, expected num_nodes=" + std::to_string(num_nodes));
    if (int(adjacency.size()) != num_nodes)
        throw DataError("adjacency has " + std::to_string(adjacency.size()) +
                        " lists, expected num_nodes=" + std::to_string(num_nodes));
    for (int u = 0; u < num_nodes; ++u) {
        for (int v : adjacency[u]) {
            if (v < 0 || v >= num_nodes)
                throw DataError("neighbor index " + std::to_string(v) + " of node " +
                                std::to_string(u) + " out of range [0, " +
                                std::to_string(num_nodes) + ")");
            if (v == u) throw DataError("explicit self-loop on node " + std::to_string(u) +
                                        "; self-loops are a policy, not an edge");
            if (!std::binary_search(adjacency[v].begin(), adjacency[v].end(), u))
                throw DataError("adjacency not symmetric: " + std::to_string(u) + " -> " +
                                std::to_string(v) + " has no reverse entry");
        }
        if (!std::is_sorted(adjacency[u].begin(), adjacency[u].end()))
            throw DataError("adjacency list of node " + std::to_string(u) + " not sorted");
    }
}

Graph Graph::from_edges(int num_nodes, const Eigen::MatrixXd& features,
                        const std::vector<std::pair<int, int>>& edges) {
    Graph g;
    g.num_nodes = num_nodes;
    g.features = features;
    g.adjacency.assign(std::size_t(std::max(num_nodes, 0)), {});
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [u, v] = edges[e];
        if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
            throw DataError("edge " + std::to_string(e) + " = (" + std::to_string(u) + "," +
                            std::to_string(v) + ") out of range [0, " +
                            std::to_string(num_nodes) + ")");
        if (u == v) throw DataError("edge " + std::to_string(e) + " is a self-loop");
        g.adjacency[std::size_t(u)].push_back(v);
        g.adjacency[std::size_t(v)].push_back(u);
    }
    for (auto& nbrs : g.adjacency) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    g.validate();
    return g;
}

std::vector<std::pair<int, int>> Graph::edge_list() const {
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < num_nodes; ++u)
        for (int v : adjacency[std::size_t(u)])
            if (u < v) edges.emplace_back(u, v);
    return edges;
}

void GraphDataset::validate() const {
    if (graphs.empty()) throw DataError("dataset is empty");
    const int d = graphs.front().feature_dim();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        graphs[i].validate();
        if (graphs[i].feature_dim() != d)
            throw DataError("graph " + std::to_string(i) + " has feature dim " +
                            std::to_string(graphs[i].feature_dim()) + ", expected " +
                            std::to_string(d));
    }
    if (mode == RegressionMode::GraphLevel) {
        if (labels.size() != Eigen::Index(graphs.size()))
            throw DataError("graph mode: labels length " + std::to_string(labels.size()) +
                            " != number of graphs " + std::to_string(graphs.size()));
    } else {
        if (graphs.size() != 1)
            throw DataError("node mode: dataset must contain exactly one graph");
        if (labels.size() != graphs.front().num_nodes)
            throw DataError("node mode: labels length " + std::to_string(labels.size()) +
                            " != number of nodes " + std::to_string(graphs.front().num_nodes));
    }
}

Eigen::MatrixXd aggregate_features(const Graph& graph, SelfLoopPolicy policy) {
    const int d = graph.feature_dim();
    Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(d, graph.num_nodes);
    for (int u = 0; u < graph.num_nodes; ++u) {
        if (policy == SelfLoopPolicy::Include) agg.col(u) = graph.features.col(u);
        for (int v : graph.adjacency[std::size_t(u)]) agg.col(u) += graph.features.col(v);
    }
    return agg;
}

FeatureNormBound feature_norm_bound(const GraphDataset& dataset, SelfLoopPolicy policy) {
    if (dataset.graphs.empty()) throw DataError("feature_norm_bound: empty dataset");
    FeatureNormBound bound;
    for (const Graph& g : dataset.graphs) {
        bound.raw = std::max(bound.raw, g.features.colwise().norm().maxCoeff());
        bound.aggregated =
            std::max(bound.aggregated, aggregate_features(g, policy).colwise().norm().maxCoeff());
    }
    return bound;
}

double delta_separation(const Eigen::MatrixXd& columns) {
    const Eigen::Index k = columns.cols();
    Eigen::MatrixXd unit(columns.rows(), k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double norm = columns.col(i).norm();
        if (norm == 0.0)
            throw DataError("delta_separation: column " + std::to_string(i) +
                            " is an unnormalizable point (zero norm)");
        unit.col(i) = columns.col(i) / norm;
    }
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i + 1; j < k; ++j) {
            const double diff = (unit.col(i) - unit.col(j)).norm();
            const double sum = (unit.col(i) + unit.col(j)).norm();
            best = std::min(best, std::min(diff, sum));
        }
    return best;
}

namespace {

Graph random_graph(Rng& rng, int num_nodes, int dim, double edge_prob) {
    // Draw order: upper-triangle edge coin flips, then feature columns.
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < num_nodes; ++u)
        for (int v = u + 1; v < num_nodes; ++v)
            if (rng.uniform() < edge_prob) edges.emplace_back(u, v);
    Eigen::MatrixXd feats(dim, num_nodes);
    for (int u = 0; u < num_nodes; ++u) {
        Eigen::VectorXd col(dim);
        do {
            for (int c = 0; c < dim; ++c) col(c) = rng.gaussian();
        } while (col.norm() == 0.0);
        feats.col(u) = col / col.norm();
    }
    return Graph::from_edges(num_nodes, feats, edges);
}

}  // namespace

GraphDataset generate_separated_dataset(const GeneratorConfig& config) {
    if (config.dim < 2) throw ConfigError("generator: dim must be >= 2");
    if (!(config.delta_target > 0.0 && config.delta_target < std::sqrt(2.0)))
        throw ConfigError("generator: delta_target must lie in (0, sqrt(2))");
    if (config.n < 1 || config.num_nodes < 1)
        throw ConfigError("generator: n and num_nodes must be >= 1");
    if (config.mode == RegressionMode::NodeLevel && config.n != 1)
        throw ConfigError("generator: node mode requires n == 1");

    Rng rng(mix_seed(config.seed, /*role=*/0xDA7A));
    GraphDataset dataset;
    dataset.mode = config.mode;
    dataset.graphs.assign(std::size_t(config.n), Graph{});

    // One draw per offending graph converges like sequential packing; a full
    // restart every so often avoids wedged configurations. Both kinds of
    // draw count against the attempt budget.
    const int n_nodes = config.num_nodes;
    std::vector<Eigen::MatrixXd> aggregated(std::size_t(config.n));
    auto redraw = [&](int index) {
        dataset.graphs[std::size_t(index)] =
            random_graph(rng, n_nodes, config.dim, config.edge_prob);
        aggregated[std::size_t(index)] =
            aggregate_features(dataset.graphs[std::size_t(index)], config.policy);
    };
    // Index of a graph violating the separation target, or -1 when none.
    auto find_violation = [&]() -> int {
        const double target = config.delta_target;
        for (int i = 0; i < config.n; ++i)
            for (int u = 0; u < n_nodes; ++u) {
                const double nu = aggregated[std::size_t(i)].col(u).norm();
                if (nu == 0.0) return i;
                const Eigen::VectorXd a = aggregated[std::size_t(i)].col(u) / nu;
                for (int j = i; j >= 0; --j) {
                    const int v_end = (j == i) ? u : n_nodes;
                    for (int v = 0; v < v_end; ++v) {
                        const double nv = aggregated[std::size_t(j)].col(v).norm();
                        if (nv == 0.0) return j;
                        const Eigen::VectorXd b = aggregated[std::size_t(j)].col(v) / nv;
                        if (std::min((a - b).norm(), (a + b).norm()) < target) return i;
                    }
                }
            }
        return -1;
    };

    long attempt = 0;
    while (attempt < config.max_attempts) {
        for (int i = 0; i < config.n && attempt < config.max_attempts; ++i, ++attempt) redraw(i);
        for (long stuck = 0; stuck < 100 * config.n && attempt < config.max_attempts; ++stuck) {
            const int bad = find_violation();
            if (bad < 0) {
                const Eigen::Index label_count =
                    config.mode == RegressionMode::GraphLevel ? config.n : config.num_nodes;
                dataset.labels.resize(label_count);
                for (Eigen::Index i = 0; i < label_count; ++i)
                    dataset.labels(i) = rng.uniform(-1.0, 1.0);
                dataset.validate();
                return dataset;
            }
            redraw(bad);
            ++attempt;
        }
    }
    throw DataError("generator: rejection budget of " + std::to_string(config.max_attempts) +
                    " attempts exceeded; try a smaller delta_target");
}

std::string dataset_to_json(const GraphDataset& dataset) {
    json root;
    root["d"] = dataset.feature_dim();
    root["mode"] = to_string(dataset.mode);
    root["graphs"] = json::array();
    for (const Graph& g : dataset.graphs) {
        json jg;
        jg["num_nodes"] = g.num_nodes;
        jg["edges"] = json::array();
        for (const auto& [u, v] : g.edge_list()) jg["edges"].push_back({u, v});
        jg["features"] = json::array();
        for (int u = 0; u < g.num_nodes; ++u) {
            json row = json::array();
            for (int c = 0; c < g.feature_dim(); ++c) row.push_back(g.features(c, u));
            jg["features"].push_back(row);
        }
        root["graphs"].push_back(jg);
    }
    root["labels"] = json::array();
    for (Eigen::Index i = 0; i < dataset.labels.size(); ++i)
        root["labels"].push_back(dataset.labels(i));
    return root.dump(2);
}

GraphDataset dataset_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("dataset JSON: ") + e.what());
    }
    auto require = [&root](const char* key) -> const json& {
        if (!root.contains(key)) throw DataError(std::string("dataset JSON: missing field '") + key + "'");
        return root.at(key);
    };
    GraphDataset dataset;
    const int d = require("d").get<int>();
    if (d < 1) throw DataError("dataset JSON: field 'd' must be >= 1");
    dataset.mode = regression_mode_from_string(require("mode").get<std::string>());
    const json& jgraphs = require("graphs");
    if (!jgraphs.is_array() || jgraphs.empty())
        throw DataError("dataset JSON: field 'graphs' must be a nonempty array");
    for (std::size_t gi = 0; gi < jgraphs.size(); ++gi) {
        const json& jg = jgraphs[gi];
        const std::string where = "graph " + std::to_string(gi);
        if (!jg.contains("num_nodes")) throw DataError("dataset JSON: " + where + ": missing 'num_nodes'");
        const int num_nodes = jg["num_nodes"].get<int>();
        if (!jg.contains("features") || !jg["features"].is_array() ||
            int(jg["features"].size()) != num_nodes)
            throw DataError("dataset JSON: " + where + ": 'features' must list one row per node");
        Eigen::MatrixXd feats(d, num_nodes);
        for (int u = 0; u < num_nodes; ++u) {
            const json& row = jg["features"][std::size_t(u)];
            if (!row.is_array() || int(row.size()) != d)
                throw DataError("dataset JSON: " + where + ": feature row " + std::to_string(u) +
                                " has length " + std::to_string(row.size()) + ", expected d=" +
                                std::to_string(d));
            for (int c = 0; c < d; ++c) feats(c, u) = row[std::size_t(c)].get<double>();
        }
        std::vector<std::pair<int, int>> edges;
        if (jg.contains("edges")) {
            for (std::size_t e = 0; e < jg["edges"].size(); ++e) {
                const json& je = jg["edges"][e];
                if (!je.is_array() || je.size() != 2)
                    throw DataError("dataset JSON: " + where + ": edge " + std::to_string(e) +
                                    " must be a pair");
                const int u = je[0].get<int>(), v = je[1].get<int>();
                if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
                    throw DataError("dataset JSON: " + where + ": edge " + std::to_string(e) +
                                    " = [" + std::to_string(u) + "," + std::to_string(v) +
                                    "] out of range [0, " + std::to_string(num_nodes) + ")");
                edges.emplace_back(u, v);
            }
        }
        try {
            dataset.graphs.push_back(Graph::from_edges(num_nodes, feats, edges));
        } catch (const DataError& e) {
            throw DataError("dataset JSON: " + where + ": " + e.what());
        }
    }
    const json& jlabels = require("labels");
    if (!jlabels.is_array()) throw DataError("dataset JSON: field 'labels' must be an array");
    dataset.labels.resize(Eigen::Index(jlabels.size()));
    for (std::size_t i = 0; i < jlabels.size(); ++i)
        dataset.labels(Eigen::Index(i)) = jlabels[i].get<double>();
    dataset.validate();
    return dataset;
}

GraphDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return dataset_from_json(buf.str());
}

void save_dataset(const GraphDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset file '" + path + "'");
    out << dataset_to_json(dataset) << "\n";
}

}  // namespace gntk
