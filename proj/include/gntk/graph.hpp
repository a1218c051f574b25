#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gntk/common.hpp"

namespace gntk {

/// Whether a node counts as its own neighbor during aggregation. Fixed per
/// experiment and recorded in every report.
enum class SelfLoopPolicy { Include, Exclude };

std::string to_string(SelfLoopPolicy policy);
SelfLoopPolicy self_loop_policy_from_string(const std::string& s);

/// Undirected graph with per-node feature columns. Edges are stored as
/// symmetric adjacency lists.
struct Graph {
    int num_nodes = 0;
    Eigen::MatrixXd features;               // d x num_nodes, column u = h(G)_u
    std::vector<std::vector<int>> adjacency; // sorted neighbor lists, no self entries

    int feature_dim() const { return int(features.rows()); }

    /// Throws DataError when an invariant is broken: wrong column count,
    /// neighbor index out of range, or asymmetric adjacency.
    void validate() const;

    /// Builds a graph from an undirected edge list (each edge listed once).
    static Graph from_edges(int num_nodes, const Eigen::MatrixXd& features,
                            const std::vector<std::pair<int, int>>& edges);

    /// Edge list with u < v, each undirected edge once.
    std::vector<std::pair<int, int>> edge_list() const;
};

enum class RegressionMode { GraphLevel, NodeLevel };

std::string to_string(RegressionMode mode);
RegressionMode regression_mode_from_string(const std::string& s);

/// A labeled collection of graphs sharing one feature dimension. Graph-level
/// mode carries one label per graph; node-level mode carries one label per
/// node of a single graph.
struct GraphDataset {
    std::vector<Graph> graphs;
    Eigen::VectorXd labels;
    RegressionMode mode = RegressionMode::GraphLevel;

    int feature_dim() const { return graphs.empty() ? 0 : graphs.front().feature_dim(); }
    int size() const { return int(graphs.size()); }

    void validate() const;
};

/// Neighbor-summed feature matrix: column l is x_l = sum over N(u_l) of the
/// feature columns, plus u_l's own column iff policy == Include. An isolated
/// node under Exclude yields a zero column.
Eigen::MatrixXd aggregate_features(const Graph& graph, SelfLoopPolicy policy);

struct FeatureNormBound {
    double raw = 0.0;        // max_u ||h(G)_u||_2 over the dataset
    double aggregated = 0.0; // max_l ||x_l||_2 of aggregated columns
};

/// Largest raw and aggregated feature norms across the dataset. The
/// aggregated value is the R used by the initialization-scale bound.
FeatureNormBound feature_norm_bound(const GraphDataset& dataset, SelfLoopPolicy policy);

/// min over unordered distinct column pairs of
/// min{ ||x/|x| - x'/|x'|||, ||x/|x| + x'/|x'||| }.
/// Throws DataError on a zero column ("unnormalizable point").
/// Returns +inf for fewer than two columns.
double delta_separation(const Eigen::MatrixXd& columns);

struct GeneratorConfig {
    int n = 1;                 // number of graphs
    int num_nodes = 1;         // nodes per graph
    int dim = 2;               // feature dimension, >= 2
    double delta_target = 0.1; // required separation of aggregated columns, in (0, sqrt(2))
    double edge_prob = 0.5;    // Erdos-Renyi edge probability
    std::uint64_t seed = 0;
    RegressionMode mode = RegressionMode::GraphLevel;
    SelfLoopPolicy policy = SelfLoopPolicy::Include; // policy the separation is checked under
    long max_attempts = 100000;
};

/// Random dataset whose aggregated, normalized feature columns are
/// delta-separated across the whole dataset. Each attempt redraws both the
/// Erdos-Renyi topology and the unit-norm feature columns: a fixed topology
/// can make the target unreachable (nodes with identical closed neighborhoods
/// produce identical aggregated columns no matter the features). Labels are
/// uniform in [-1, 1]. Fully determined by the seed.
GraphDataset generate_separated_dataset(const GeneratorConfig& config);

/// Dataset JSON, exact schema:
/// {"d": int, "mode": "graph"|"node",
///  "graphs": [{"num_nodes": int, "edges": [[u,v],...], "features": [[f_1..f_d] per node]}],
///  "labels": [float,...]}
std::string dataset_to_json(const GraphDataset& dataset);
GraphDataset dataset_from_json(const std::string& text);
GraphDataset load_dataset(const std::string& path);
void save_dataset(const GraphDataset& dataset, const std::string& path);

}  // namespace gntk
