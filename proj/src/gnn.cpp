#include "gntk/gnn.hpp"

#include <cmath>

#include <json.hpp>

#include "gntk/kernels.hpp"
#include "gntk/spectral.hpp"

namespace gntk {

using nlohmann::json;

void GnnParams::validate() const {
    if (width() < 1 || dim() < 1) throw ConfigError("gnn params: need d >= 1 and m >= 1");
    if (signs.size() != width()) throw ConfigError("gnn params: |a| != m");
    for (Eigen::Index r = 0; r < signs.size(); ++r)
        if (signs(r) != 1.0 && signs(r) != -1.0)
            throw ConfigError("gnn params: a_" + std::to_string(r) + " not in {-1, +1}");
    if (bias < 0.0) throw ConfigError("gnn params: bias must be >= 0");
    if (kappa <= 0.0) throw ConfigError("gnn params: kappa must be > 0");
}

std::string GnnParams::to_json() const {
    json root;
    root["d"] = dim();
    root["m"] = width();
    root["bias"] = bias;
    root["kappa"] = kappa;
    root["W"] = json::array();
    for (int r = 0; r < width(); ++r)
        for (int c = 0; c < dim(); ++c) root["W"].push_back(weights(c, r));
    root["a"] = json::array();
    for (int r = 0; r < width(); ++r) root["a"].push_back(int(signs(r)));
    return root.dump();
}

GnnParams GnnParams::from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("checkpoint JSON: ") + e.what());
    }
    for (const char* key : {"d", "m", "bias", "kappa", "W", "a"})
        if (!root.contains(key))
            throw DataError(std::string("checkpoint JSON: missing field '") + key + "'");
    GnnParams params;
    const int d = root["d"].get<int>(), m = root["m"].get<int>();
    params.bias = root["bias"].get<double>();
    params.kappa = root["kappa"].get<double>();
    if (int(root["W"].size()) != d * m)
        throw DataError("checkpoint JSON: W has " + std::to_string(root["W"].size()) +
                        " entries, expected d*m=" + std::to_string(d * m));
    if (int(root["a"].size()) != m)
        throw DataError("checkpoint JSON: a has " + std::to_string(root["a"].size()) +
                        " entries, expected m=" + std::to_string(m));
    params.weights.resize(d, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < d; ++c)
            params.weights(c, r) = root["W"][std::size_t(r * d + c)].get<double>();
    params.signs.resize(m);
    for (int r = 0; r < m; ++r) params.signs(r) = root["a"][std::size_t(r)].get<double>();
    params.validate();
    return params;
}

GnnParams init_params(int dim, int width, double bias, double kappa, std::uint64_t seed) {
    if (dim < 1 || width < 1) throw ConfigError("init_params: need d >= 1 and m >= 1");
    GnnParams params;
    params.bias = bias;
    params.kappa = kappa;
    params.weights.resize(dim, width);
    params.signs.resize(width);
    Rng rng(mix_seed(seed, /*role=*/0x1217));
    // Draw order: all of W column-major, then the m signs.
    for (int r = 0; r < width; ++r)
        for (int c = 0; c < dim; ++c) params.weights(c, r) = rng.gaussian();
    for (int r = 0; r < width; ++r) params.signs(r) = rng.sign();
    params.validate();
    return params;
}

GnnParams symmetric_init_params(int dim, int width, double bias, double kappa,
                                std::uint64_t seed) {
    if (dim < 1 || width < 1) throw ConfigError("symmetric_init_params: need d >= 1 and m >= 1");
    GnnParams params;
    params.bias = bias;
    params.kappa = kappa;
    params.weights.resize(dim, width);
    params.signs.resize(width);
    Rng rng(mix_seed(seed, /*role=*/0x1218));
    // Draw order: per pair, one weight column then its sign; the mirrored
    // unit copies the column and flips the sign.
    int r = 0;
    for (; r + 1 < width; r += 2) {
        for (int c = 0; c < dim; ++c) params.weights(c, r) = rng.gaussian();
        params.weights.col(r + 1) = params.weights.col(r);
        params.signs(r) = rng.sign();
        params.signs(r + 1) = -params.signs(r);
    }
    if (r < width) {
        for (int c = 0; c < dim; ++c) params.weights(c, r) = rng.gaussian();
        params.signs(r) = rng.sign();
    }
    params.validate();
    return params;
}

double forward_graph(const GnnParams& params, const Eigen::MatrixXd& agg) {
    if (agg.rows() != params.dim())
        throw DataError("forward_graph: feature dim " + std::to_string(agg.rows()) +
                        " != params dim " + std::to_string(params.dim()));
    const Eigen::MatrixXd z = params.weights.transpose() * agg; // m x N
    const double total =
        params.signs.dot((z.array() - params.bias).max(0.0).matrix().rowwise().sum());
    return total / std::sqrt(double(params.width()));
}

double forward_node(const GnnParams& params, const Eigen::MatrixXd& agg, int node_index) {
    if (node_index < 0 || node_index >= int(agg.cols()))
        throw DataError("forward_node: node index " + std::to_string(node_index) +
                        " out of range [0, " + std::to_string(agg.cols()) + ")");
    return forward_graph(params, agg.col(node_index));
}

Eigen::MatrixXd grad_graph(const GnnParams& params, const Eigen::MatrixXd& agg) {
    if (agg.rows() != params.dim())
        throw DataError("grad_graph: feature dim " + std::to_string(agg.rows()) +
                        " != params dim " + std::to_string(params.dim()));
    const Eigen::MatrixXd z = params.weights.transpose() * agg; // m x N
    // Indicator fires at exactly zero: 1{z >= b}.
    const Eigen::MatrixXd fire = (z.array() >= params.bias).cast<double>().matrix();
    Eigen::MatrixXd grad = agg * fire.transpose(); // d x m
    grad.array().rowwise() *= params.signs.transpose().array();
    return grad / std::sqrt(double(params.width()));
}

const TraceStep& TrainTrace::at(long t) const {
    for (const TraceStep& s : steps)
        if (s.t == t) return s;
    throw ConfigError("train trace: no record for step " + std::to_string(t));
}

namespace {

Eigen::MatrixXd dynamic_gram_of(const GnnParams& params,
                                const std::vector<Eigen::MatrixXd>& samples) {
    const Eigen::Index n = Eigen::Index(samples.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            gram(i, j) = gram(j, i) = indicator_pair_kernel(params.weights, params.bias,
                                                            samples[std::size_t(i)],
                                                            samples[std::size_t(j)]);
    return gram;
}

}  // namespace

TrainTrace train_gd(GnnParams& params, const std::vector<Eigen::MatrixXd>& samples,
                    const Eigen::VectorXd& labels, const Eigen::MatrixXd& test_sample,
                    const TrainOptions& options) {
    params.validate();
    const Eigen::Index n = Eigen::Index(samples.size());
    if (labels.size() != n)
        throw ConfigError("train_gd: " + std::to_string(n) + " samples but " +
                          std::to_string(labels.size()) + " labels");
    if (options.steps < 0) throw ConfigError("train_gd: T must be >= 0");
    const long trace_every = options.trace_every > 0 ? options.trace_every : 1;

    const double inv_sqrt_m = 1.0 / std::sqrt(double(params.width()));
    const Eigen::MatrixXd weights0 = params.weights;

    TrainTrace trace;
    trace.total_steps = options.steps;

    double eta = options.eta;
    if (eta <= 0.0 || options.record_kernel) {
        trace.h0 = dynamic_gram_of(params, samples);
        if (eta <= 0.0) {
            const double lmax = lambda_extremes(trace.h0).lambda_max;
            if (lmax <= 0.0) throw ConfigError("train_gd: H(0) has no positive eigenvalue; cannot auto-t eta");
            eta = 1.0 / (params.kappa * params.kappa * lmax);
        }
    }
    trace.eta = eta;

    auto predict = [&](const Eigen::MatrixXd& agg) { return params.kappa * forward_graph(params, agg); };

    auto record = [&](long t) {
        TraceStep step;
        step.t = t;
        step.u_train.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) step.u_train(i) = predict(samples[std::size_t(i)]);
        step.loss = 0.5 * (labels - step.u_train).squaredNorm();
        step.u_test = predict(test_sample);
        step.max_weight_move = (params.weights - weights0).colwise().norm().maxCoeff();
        if (options.record_kernel)
            step.kernel_drift_frob = (dynamic_gram_of(params, samples) - trace.h0).norm();
        if (!std::isfinite(step.loss))
            throw TrainingDivergedError(t, "train_gd: non-finite loss at step " + std::to_string(t) +
                                               "; eta is likely too large");
        trace.steps.push_back(std::move(step));
    };

    record(0);
    for (long t = 1; t <= options.steps; ++t) {
        // grad of 0.5 ||Y - kappa f||^2: accumulate kappa (y_i - u_i) df_i/dW.
        Eigen::VectorXd residual(n);
        Eigen::MatrixXd update = Eigen::MatrixXd::Zero(params.dim(), params.width());
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::MatrixXd& agg = samples[std::size_t(i)];
            const Eigen::MatrixXd z = params.weights.transpose() * agg;
            const double f =
                inv_sqrt_m *
                params.signs.dot((z.array() - params.bias).max(0.0).matrix().rowwise().sum());
            residual(i) = labels(i) - params.kappa * f;
            const Eigen::MatrixXd fire = (z.array() >= params.bias).cast<double>().matrix();
            update.noalias() += residual(i) * (agg * fire.transpose());
        }
        update.array().rowwise() *= params.signs.transpose().array();
        params.weights.noalias() += (eta * params.kappa * inv_sqrt_m) * update;
        if (!params.weights.allFinite())
            throw TrainingDivergedError(t, "train_gd: non-finite weights at step " +
                                               std::to_string(t));
        if (t % trace_every == 0 || t == options.steps) record(t);
    }
    return trace;
}

}  // namespace gntk
