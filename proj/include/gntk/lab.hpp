#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gntk/dynamics.hpp"
#include "gntk/gnn.hpp"
#include "gntk/graph.hpp"
#include "gntk/kernels.hpp"
#include "gntk/regression.hpp"

namespace gntk {

/// One experiment description, shared by all harness entry points and the
/// CLI. Datasets come either from a file or from the separated-data
/// generator.
struct ExperimentConfig {
    RegressionMode mode = RegressionMode::GraphLevel;
    std::string dataset_path;                     // file input ...
    std::optional<GeneratorConfig> generator;     // ... or generated input
    std::string test_dataset_path;                // graph mode: held-out graph file (optional)
    int test_node = -1;                           // node mode: held-out node, default last
    std::vector<long> widths;                     // GNN widths, or MC widths in concentration
    long steps = 1000;                            // T
    double eta = 0.0;                             // <= 0 means auto 1/(kappa^2 lambda_max(H^cts))
    double kappa = 0.25;
    double bias = 0.0;
    std::vector<std::uint64_t> seeds;
    SelfLoopPolicy policy = SelfLoopPolicy::Include;
    long trace_every = 100;
    double delta = 0.05;                          // failure-probability knob in reported bounds
    std::string out;                              // output path, empty = stdout

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    void validate() const;
};

/// Train-side samples, labels, and the held-out sample of one experiment.
/// Graph mode with a generator draws n+1 graphs under the same separation
/// constraint and holds the last one out as the test graph; node mode holds
/// out one node of the single graph (transductive split).
struct ExperimentData {
    GraphDataset train;                     // test graph/node removed
    std::vector<Eigen::MatrixXd> samples;   // aggregated train samples
    Eigen::VectorXd labels;
    Eigen::MatrixXd test_sample;            // aggregated held-out sample
    int dim = 0;
};

ExperimentData prepare_experiment_data(const ExperimentConfig& config);

struct EquivalenceRow {
    long width = 0;
    std::uint64_t seed = 0;
    double gap_gnn_vs_exact = 0.0;
    double gap_gntkiter_vs_exact = 0.0;
    double gap_gntkiter_half = 0.0; // same gap at T/2, for the monotonicity check
    double lambda_min = 0.0;
    double final_loss = 0.0;
    bool failed = false;
    std::string error;
};

struct EquivalenceReport {
    std::vector<EquivalenceRow> rows; // ordered by (width, seed)
    double u_test_star = 0.0;
    double eta_used = 0.0;
    std::string config_echo;

    std::string to_csv() const;
    bool any_failed() const;
    /// Median gap_gnn_vs_exact per width, in the report's width order.
    std::vector<double> median_gap_per_width() const;
};

/// For each (width, seed): trains a fresh GNN for T steps and runs the
/// iterative kernel regression with the same kappa, eta, T, recording both
/// predictors' distance to the exact kernel-regression test value.
EquivalenceReport run_equivalence(const ExperimentConfig& config);

/// Node-level variant: single graph, one held-out node, single-layer
/// node-level GNTK Gram.
EquivalenceReport run_node_equivalence(const ExperimentConfig& config);

struct ConcentrationRow {
    long width = 0;
    std::uint64_t seed = 0;
    double frob_err = 0.0; // || H^dis - H^cts ||_F
    double bound = 0.0;    // 4 N n sqrt(log(n/delta) / m)
};

struct ConcentrationReport {
    std::vector<ConcentrationRow> rows;
    std::optional<double> median_loglog_slope; // empty with fewer than two widths
    std::string config_echo;

    std::string to_csv() const;
};

/// || H^dis(m, seed) - H^cts ||_F against the concentration bound, across
/// widths and seeds, plus the fitted log-log slope of the median error.
ConcentrationReport run_concentration(const ExperimentConfig& config);

struct DriftRow {
    long width = 0;
    std::uint64_t seed = 0;
    DriftReport report;
    bool failed = false;
    std::string error;
};

struct DriftRunReport {
    std::vector<DriftRow> rows;
    std::string config_echo;

    std::string to_csv() const;
    bool any_failed() const;
};

/// Trains with kernel snapshots every trace_every steps and emits the drift
/// series with the perturbation bounds per (width, seed).
DriftRunReport run_drift(const ExperimentConfig& config);

/// Writes "# <config json>" followed by the report CSV; empty path = stdout.
void save_report(const std::string& csv_with_echo, const std::string& path);

/// The desk-scale reference experiments the acceptance suite runs.
ExperimentConfig reference_graph_config();
ExperimentConfig reference_node_config();

}  // namespace gntk
