#include "gntk/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace gntk {

double dynamic_kernel_pair(const GnnParams& params, const Eigen::MatrixXd& agg_g,
                           const Eigen::MatrixXd& agg_h) {
    return indicator_pair_kernel(params.weights, params.bias, agg_g, agg_h);
}

KernelMatrix dynamic_gram_samples(const GnnParams& params,
                                  const std::vector<Eigen::MatrixXd>& samples, long time_step) {
    const Eigen::Index n = Eigen::Index(samples.size());
    Eigen::MatrixXd gram(n, n);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> entries;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) entries.emplace_back(i, j);
    parallel_for(entries.size(), [&](std::size_t k) {
        const auto [i, j] = entries[k];
        gram(i, j) = dynamic_kernel_pair(params, samples[std::size_t(i)], samples[std::size_t(j)]);
    });
    return KernelMatrix::from_upper(std::move(gram), Provenance::dynamic(time_step));
}

KernelMatrix dynamic_gram(const GnnParams& params, const GraphDataset& dataset,
                          SelfLoopPolicy policy) {
    return dynamic_gram_samples(params, dataset_samples(dataset, policy), 0);
}

std::string DriftReport::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "t,ht_vs_h0_frob,max_weight_move,bound_drift\n";
    for (std::size_t i = 0; i < sampled_steps.size(); ++i)
        out << sampled_steps[i] << "," << ht_vs_h0_frob[i] << "," << max_weight_move[i] << ","
            << bound_drift[i] << "\n";
    return out.str();
}

DriftReport drift_report(const TrainTrace& trace, const GraphDataset& dataset,
                         SelfLoopPolicy policy, const KernelMatrix& h_cts, double delta,
                         int width) {
    if (trace.steps.empty()) throw ConfigError("drift_report: empty trace");
    if (trace.h0.size() == 0 || !trace.steps.front().kernel_drift_frob.has_value())
        throw ConfigError("drift_report: trace has no kernel snapshots; train with record_kernel");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("drift_report: delta must be in (0, 1)");

    int max_nodes = 0;
    for (const Graph& g : dataset.graphs) max_nodes = std::max(max_nodes, g.num_nodes);
    const double n = double(dataset_samples(dataset, policy).size());
    const double big_n = dataset.mode == RegressionMode::GraphLevel ? double(max_nodes) : 1.0;

    DriftReport report;
    report.delta_used = delta;
    report.h0_vs_cts_frob = (trace.h0 - h_cts.values).norm();
    report.bound_h0 = 4.0 * big_n * n * std::sqrt(std::log(n / delta) / double(width));
    for (const TraceStep& step : trace.steps) {
        if (!step.kernel_drift_frob.has_value()) continue;
        report.sampled_steps.push_back(step.t);
        report.ht_vs_h0_frob.push_back(*step.kernel_drift_frob);
        report.max_weight_move.push_back(step.max_weight_move);
        report.bound_drift.push_back(2.0 * big_n * n * step.max_weight_move);
        if (step.t > 0 && *step.kernel_drift_frob >= report.bound_drift.back())
            report.violations.push_back(step.t);
    }
    const double final_move = report.max_weight_move.empty() ? 0.0 : report.max_weight_move.back();
    report.violation_probability =
        big_n * big_n * n * n * std::exp(-double(width) * final_move / 10.0);
    return report;
}

}  // namespace gntk
