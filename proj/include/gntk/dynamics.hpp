#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gntk/gnn.hpp"
#include "gntk/kernels.hpp"

namespace gntk {

/// Gradient inner product of two samples at the network's current weights:
/// <df(W,G)/dW, df(W,H)/dW>. Equals <grad_graph(G), grad_graph(H)> exactly;
/// the indicator-sum form here is the second, independent route.
double dynamic_kernel_pair(const GnnParams& params, const Eigen::MatrixXd& agg_g,
                           const Eigen::MatrixXd& agg_h);

/// H(t): the dynamic-kernel Gram over the dataset at the given weights.
/// At freshly initialized weights this *is* H^dis for the same draws.
KernelMatrix dynamic_gram(const GnnParams& params, const GraphDataset& dataset,
                          SelfLoopPolicy policy);

KernelMatrix dynamic_gram_samples(const GnnParams& params,
                                  const std::vector<Eigen::MatrixXd>& samples, long time_step);

struct DriftReport {
    double h0_vs_cts_frob = 0.0;          // || H(0) - H^cts ||_F
    std::vector<long> sampled_steps;      // trace steps with kernel snapshots
    std::vector<double> ht_vs_h0_frob;    // || H(t) - H(0) ||_F per sampled step
    std::vector<double> max_weight_move;  // max_r || w_r(t) - w_r(0) ||_2 per sampled step
    std::vector<double> bound_drift;      // 2 N n * max weight move per sampled step
    double bound_h0 = 0.0;                // 4 N n sqrt(log(n / delta) / m)
    double delta_used = 0.0;
    std::vector<long> violations;         // sampled steps where drift >= bound_drift
    double violation_probability = 0.0;   // N^2 n^2 exp(-m R0 / 10) at the final weight move

    std::string to_csv() const; // columns t, ht_vs_h0_frob, max_weight_move, bound_drift
};

/// Assembles the drift series of a recorded training trace next to the two
/// perturbation bounds. The spectral-norm statements are checked in
/// Frobenius norm (an upper bound on the spectral norm, so sufficient).
/// Requires a trace recorded with record_kernel = true.
DriftReport drift_report(const TrainTrace& trace, const GraphDataset& dataset,
                         SelfLoopPolicy policy, const KernelMatrix& h_cts, double delta, int width);

}  // namespace gntk
