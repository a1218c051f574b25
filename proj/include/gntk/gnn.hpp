#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "gntk/graph.hpp"

namespace gntk {

/// Single-hidden-layer GNN state: d x m weights (columns w_r), frozen sign
/// readout a, shift b of the activation relu(z - b), output multiplier kappa.
struct GnnParams {
    Eigen::MatrixXd weights;   // d x m
    Eigen::VectorXd signs;     // length m, entries in {-1, +1}
    double bias = 0.0;
    double kappa = 1.0;

    int dim() const { return int(weights.rows()); }
    int width() const { return int(weights.cols()); }
    void validate() const;

    /// Checkpoint JSON: {"d","m","bias","kappa","W":[column-major],"a":[+-1]}.
    std::string to_json() const;
    static GnnParams from_json(const std::string& text);
};

/// W columns i.i.d. standard Gaussian, signs i.i.d. uniform; one seeded
/// stream, drawn in a fixed order (all of W column-major, then a).
GnnParams init_params(int dim, int width, double bias, double kappa, std::uint64_t seed);

/// Paired initialization with f(W(0), G) = 0 for every input: units come in
/// duplicated-weight pairs with opposite readout signs; an odd trailing unit
/// is drawn plain. Each unit keeps the standard Gaussian marginal and the
/// init-time kernel is the duplicated-draw indicator average. This is the
/// equivalence harness's stand-in for the vanishing-multiplier hypothesis,
/// which at a fixed kappa would otherwise leave a width-independent
/// initial-output term in every test prediction.
GnnParams symmetric_init_params(int dim, int width, double bias, double kappa,
                                std::uint64_t seed);

/// f(W, a, G) = (1/sqrt(m)) sum_r a_r sum_l relu(w_r' x_l - b) over the
/// aggregated columns of one sample. A node-level sample is the single
/// aggregated column of that node.
double forward_graph(const GnnParams& params, const Eigen::MatrixXd& agg);

/// Node-level output: the single term of forward_graph at one column.
double forward_node(const GnnParams& params, const Eigen::MatrixXd& agg, int node_index);

/// d f / d W with the indicator convention step(z) = 1{z >= 0} applied to
/// w_r' x_l - b; column r = (1/sqrt(m)) a_r sum_l x_l 1{w_r' x_l >= b}.
Eigen::MatrixXd grad_graph(const GnnParams& params, const Eigen::MatrixXd& agg);

struct TraceStep {
    long t = 0;
    double loss = 0.0;          // 0.5 || Y - kappa f(W, G) ||^2
    Eigen::VectorXd u_train;    // kappa f per training sample
    double u_test = 0.0;        // kappa f on the held-out sample
    double max_weight_move = 0.0; // max_r || w_r(t) - w_r(0) ||_2
    std::optional<double> kernel_drift_frob; // || H(t) - H(0) ||_F when sampled
};

struct TrainTrace {
    std::vector<TraceStep> steps; // step 0 is the pre-training state
    double eta = 0.0;
    long total_steps = 0;
    Eigen::MatrixXd h0; // dynamic kernel at initialization, when recorded

    const TraceStep& at(long t) const;
    const TraceStep& final() const { return steps.back(); }
};

struct TrainOptions {
    double eta = 0.0;         // <= 0 means auto: 1 / (kappa^2 lambda_max(H(0)))
    long steps = 0;
    long trace_every = 1;     // snapshot cadence; 0 and T are always recorded
    bool record_kernel = false; // also snapshot || H(t) - H(0) ||_F (costs a Gram per snapshot)
};

/// Full-batch gradient descent on 0.5 || Y - kappa f(W, G) ||^2 over the
/// sample list (graph mode: one aggregated matrix per graph; node mode: one
/// column per training node). Mutates params in place and returns the trace.
/// A non-finite loss raises TrainingDivergedError with the offending step.
TrainTrace train_gd(GnnParams& params, const std::vector<Eigen::MatrixXd>& samples,
                    const Eigen::VectorXd& labels, const Eigen::MatrixXd& test_sample,
                    const TrainOptions& options);

}  // namespace gntk
