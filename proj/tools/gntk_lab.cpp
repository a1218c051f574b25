// Command-line laboratory: dataset generation, kernel computation, training,
// and the equivalence/concentration/drift/spectral experiment harness.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gntk/dynamics.hpp"
#include "gntk/gnn.hpp"
#include "gntk/kernels.hpp"
#include "gntk/lab.hpp"
#include "gntk/multinet.hpp"
#include "gntk/regression.hpp"
#include "gntk/spectral.hpp"

using namespace gntk;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void emit(const std::string& text, const std::string& out_path) {
    save_report(text, out_path);
}

/// Shared experiment flags. A --config file is read first; explicit flags
/// override its fields.
struct ConfigFlags {
    std::string config_path;
    std::string dataset;
    std::string test_dataset;
    int test_node = -1;
    std::vector<long> widths;
    std::vector<std::uint64_t> seeds;
    long steps = -1;
    std::string eta = "";
    double kappa = -1.0;
    double bias = -1.0;
    std::string policy;
    long trace_every = -1;
    double delta = -1.0;
    std::string out;
    // Generator spec.
    int gen_n = 0;
    int gen_nodes = 0;
    int gen_dim = 0;
    double gen_delta = 0.0;
    double gen_edge_prob = 0.5;
    std::uint64_t gen_seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "full experiment config as JSON");
        cmd->add_option("--data", dataset, "dataset JSON path");
        cmd->add_option("--test-data", test_dataset, "held-out graph dataset JSON path");
        cmd->add_option("--test-node", test_node, "held-out node index (node mode)");
        cmd->add_option("--widths", widths, "width sweep")->delimiter(',');
        cmd->add_option("--seeds", seeds, "seed sweep")->delimiter(',');
        cmd->add_option("--steps", steps, "gradient-descent iterations T");
        cmd->add_option("--eta", eta, "step size, or 'auto'");
        cmd->add_option("--kappa", kappa, "output multiplier");
        cmd->add_option("--bias", bias, "activation shift b");
        cmd->add_option("--policy", policy, "self-loop policy: include|exclude");
        cmd->add_option("--trace-every", trace_every, "snapshot cadence");
        cmd->add_option("--delta", delta, "failure probability used in reported bounds");
        cmd->add_option("--out", out, "output path (default stdout)");
        cmd->add_option("--gen-n", gen_n, "generator: number of graphs");
        cmd->add_option("--gen-nodes", gen_nodes, "generator: nodes per graph");
        cmd->add_option("--gen-dim", gen_dim, "generator: feature dimension");
        cmd->add_option("--gen-delta", gen_delta, "generator: separation target");
        cmd->add_option("--gen-edge-prob", gen_edge_prob, "generator: edge probability");
        cmd->add_option("--gen-seed", gen_seed, "generator: seed");
    }

    ExperimentConfig resolve(RegressionMode mode) const {
        ExperimentConfig config;
        if (!config_path.empty()) config = ExperimentConfig::from_json(slurp(config_path));
        config.mode = mode;
        if (!policy.empty()) config.policy = self_loop_policy_from_string(policy);
        if (!dataset.empty()) config.dataset_path = dataset;
        if (!test_dataset.empty()) config.test_dataset_path = test_dataset;
        if (test_node >= 0) config.test_node = test_node;
        if (gen_n > 0) {
            GeneratorConfig gen;
            gen.n = gen_n;
            gen.num_nodes = gen_nodes > 0 ? gen_nodes : 1;
            gen.dim = gen_dim > 0 ? gen_dim : 2;
            gen.delta_target = gen_delta > 0.0 ? gen_delta : 0.1;
            gen.edge_prob = gen_edge_prob;
            gen.seed = gen_seed;
            gen.mode = mode;
            gen.policy = config.policy;
            config.generator = gen;
        }
        if (!widths.empty()) config.widths = widths;
        if (!seeds.empty()) config.seeds = seeds;
        if (steps >= 0) config.steps = steps;
        if (!eta.empty()) config.eta = eta == "auto" ? 0.0 : std::stod(eta);
        if (kappa > 0.0) config.kappa = kappa;
        if (bias >= 0.0) config.bias = bias;
        if (trace_every > 0) config.trace_every = trace_every;
        if (delta > 0.0) config.delta = delta;
        if (!out.empty()) config.out = out;
        return config;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gntk_lab: graph neural tangent kernels vs finite-width GNN training"};
    app.require_subcommand(1);

    // gen-data -------------------------------------------------------------
    auto* gen_cmd = app.add_subcommand("gen-data", "generate a delta-separated dataset");
    int n = 1, nodes = 1, dim = 2;
    double delta_target = 0.1, edge_prob = 0.5;
    std::uint64_t seed = 0;
    std::string mode = "graph", policy = "include", out;
    gen_cmd->add_option("--n", n, "number of graphs");
    gen_cmd->add_option("--nodes", nodes, "nodes per graph");
    gen_cmd->add_option("--dim", dim, "feature dimension");
    gen_cmd->add_option("--delta", delta_target, "separation target");
    gen_cmd->add_option("--edge-prob", edge_prob, "Erdos-Renyi edge probability");
    gen_cmd->add_option("--seed", seed, "generator seed");
    gen_cmd->add_option("--mode", mode, "graph|node");
    gen_cmd->add_option("--policy", policy, "include|exclude");
    gen_cmd->add_option("--out", out, "output path (default stdout)");

    // gram -----------------------------------------------------------------
    auto* gram_cmd = app.add_subcommand("gram", "train-set kernel matrix (H^cts, H^dis, shifted)");
    std::string gram_data, gram_policy = "include", gram_estimator = "analytic", gram_out;
    long gram_width = 1000;
    double gram_bias = 0.0;
    std::uint64_t gram_seed = 0;
    gram_cmd->add_option("--data", gram_data, "dataset JSON path")->required();
    gram_cmd->add_option("--policy", gram_policy, "include|exclude");
    gram_cmd->add_option("--estimator", gram_estimator, "analytic|mc|shifted");
    gram_cmd->add_option("--width", gram_width, "Monte Carlo sample count m");
    gram_cmd->add_option("--bias", gram_bias, "activation shift for 'shifted'");
    gram_cmd->add_option("--seed", gram_seed, "Monte Carlo seed");
    gram_cmd->add_option("--out", gram_out, "output path (default stdout)");

    // node-gntk ------------------------------------------------------------
    auto* node_cmd = app.add_subcommand("node-gntk", "multi-level node-level kernel matrix");
    std::string nk_data, nk_policy = "include", nk_out;
    int nk_levels = 1, nk_layers = 1;
    bool nk_strict = false;
    node_cmd->add_option("--data", nk_data, "dataset JSON path (first graph is used)")->required();
    node_cmd->add_option("--levels", nk_levels, "aggregate levels L");
    node_cmd->add_option("--layers", nk_layers, "combine layers per level R");
    node_cmd->add_option("--policy", nk_policy, "include|exclude");
    node_cmd->add_flag("--strict-init", nk_strict, "literal unaggregated covariance init");
    node_cmd->add_option("--out", nk_out, "output path (default stdout)");

    // regress --------------------------------------------------------------
    auto* regress_cmd = app.add_subcommand("regress", "exact and iterative kernel regression");
    ConfigFlags regress_flags;
    regress_flags.attach(regress_cmd);
    std::string regress_mode = "graph";
    regress_cmd->add_option("--mode", regress_mode, "graph|node");

    // train ----------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "gradient-descent training of one GNN");
    ConfigFlags train_flags;
    train_flags.attach(train_cmd);
    std::string train_mode = "graph", checkpoint_out;
    bool record_kernel = false;
    train_cmd->add_option("--mode", train_mode, "graph|node");
    train_cmd->add_option("--checkpoint", checkpoint_out, "write final params JSON here");
    train_cmd->add_flag("--record-kernel", record_kernel, "snapshot ||H(t)-H(0)||_F");

    // experiment harness ----------------------------------------------------
    auto* equiv_cmd = app.add_subcommand("equiv", "graph-level equivalence sweep");
    ConfigFlags equiv_flags;
    equiv_flags.attach(equiv_cmd);
    auto* equiv_node_cmd = app.add_subcommand("equiv-node", "node-level equivalence sweep");
    ConfigFlags equiv_node_flags;
    equiv_node_flags.attach(equiv_node_cmd);
    auto* conc_cmd = app.add_subcommand("concentration", "H^dis vs H^cts concentration sweep");
    ConfigFlags conc_flags;
    conc_flags.attach(conc_cmd);
    auto* drift_cmd = app.add_subcommand("drift", "kernel drift during training");
    ConfigFlags drift_flags;
    drift_flags.attach(drift_cmd);

    // spectral ---------------------------------------------------------------
    auto* spectral_cmd = app.add_subcommand("spectral", "extreme eigenvalues and gap checks");
    std::string sp_kernel, sp_data, sp_policy = "include", sp_check = "none", sp_out;
    double sp_delta = 0.0, sp_bias = 0.0;
    long sp_width = 1000000;
    std::uint64_t sp_seed = 0;
    spectral_cmd->add_option("--kernel", sp_kernel, "kernel CSV path");
    spectral_cmd->add_option("--data", sp_data, "dataset JSON path (analytic gram)");
    spectral_cmd->add_option("--policy", sp_policy, "include|exclude");
    spectral_cmd->add_option("--check", sp_check, "none|separation|shifted");
    spectral_cmd->add_option("--delta", sp_delta, "separation delta of the dataset");
    spectral_cmd->add_option("--bias", sp_bias, "activation shift for 'shifted'");
    spectral_cmd->add_option("--width", sp_width, "Monte Carlo sample count for 'shifted'");
    spectral_cmd->add_option("--seed", sp_seed, "Monte Carlo seed");
    spectral_cmd->add_option("--out", sp_out, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) {
            GeneratorConfig config;
            config.n = n;
            config.num_nodes = nodes;
            config.dim = dim;
            config.delta_target = delta_target;
            config.edge_prob = edge_prob;
            config.seed = seed;
            config.mode = regression_mode_from_string(mode);
            config.policy = self_loop_policy_from_string(policy);
            emit(dataset_to_json(generate_separated_dataset(config)) + "\n", out);
        } else if (gram_cmd->parsed()) {
            const GraphDataset ds = load_dataset(gram_data);
            const SelfLoopPolicy pol = self_loop_policy_from_string(gram_policy);
            KernelMatrix kernel;
            if (gram_estimator == "analytic") kernel = gntk_gram(ds, pol);
            else if (gram_estimator == "mc")
                kernel = mc_gntk_gram(ds, pol, gram_width, gram_seed).kernel;
            else if (gram_estimator == "shifted")
                kernel = shifted_gntk_gram(ds, pol, gram_bias, gram_width, gram_seed).kernel;
            else throw ConfigError("unknown estimator '" + gram_estimator + "'");
            emit(kernel.to_csv(), gram_out);
        } else if (node_cmd->parsed()) {
            const GraphDataset ds = load_dataset(nk_data);
            NodeGntkOptions options;
            options.levels = nk_levels;
            options.layers = nk_layers;
            options.strict_paper_init = nk_strict;
            const NodeGntkResult result =
                node_gntk(ds.graphs.front(), self_loop_policy_from_string(nk_policy), options);
            emit(result.kernel.to_csv(), nk_out);
        } else if (regress_cmd->parsed()) {
            const ExperimentConfig config =
                regress_flags.resolve(regression_mode_from_string(regress_mode));
            const ExperimentData data = prepare_experiment_data(config);
            const KernelMatrix gram = gntk_gram_from_samples(data.samples);
            const Eigen::VectorXd k_test = gntk_cross(data.test_sample, data.samples);
            const ExactSolution exact = solve_exact(gram, k_test, data.labels);
            const double eta =
                config.eta > 0.0 ? config.eta
                                 : 1.0 / (config.kappa * config.kappa *
                                          lambda_extremes(gram).lambda_max);
            RegressionProblem problem{gram, k_test, data.labels, config.kappa, eta, config.steps};
            const RegressionTrace trace = iterate_regression(problem);
            std::ostringstream csv;
            csv.precision(17);
            csv << "# " << config.to_json() << "\n";
            csv << "# u_test_star: " << exact.u_test_star << " lambda_min: " << exact.lambda_min
                << " eta: " << eta << "\n";
            csv << "t,u_test,gap,residual_norm\n";
            const long every = std::max<long>(1, config.trace_every);
            for (const RegressionStep& step : trace.steps) {
                if (step.t % every != 0 && step.t != config.steps) continue;
                csv << step.t << "," << step.u_test << ","
                    << std::abs(step.u_test - exact.u_test_star) << ","
                    << (data.labels - step.u).norm() << "\n";
            }
            emit(csv.str(), config.out);
        } else if (train_cmd->parsed()) {
            ExperimentConfig config = train_flags.resolve(regression_mode_from_string(train_mode));
            if (config.widths.empty()) config.widths = {512};
            if (config.seeds.empty()) config.seeds = {0};
            const ExperimentData data = prepare_experiment_data(config);
            GnnParams params = init_params(data.dim, int(config.widths.front()), config.bias,
                                           config.kappa, config.seeds.front());
            TrainOptions options;
            options.eta = config.eta;
            options.steps = config.steps;
            options.trace_every = config.trace_every;
            options.record_kernel = record_kernel;
            const TrainTrace trace =
                train_gd(params, data.samples, data.labels, data.test_sample, options);
            std::ostringstream csv;
            csv.precision(17);
            csv << "# " << config.to_json() << "\n";
            csv << "# eta: " << trace.eta << " policy: " << to_string(config.policy) << "\n";
            csv << "t,loss,u_test,max_weight_move,kernel_drift_frob\n";
            for (const TraceStep& step : trace.steps) {
                csv << step.t << "," << step.loss << "," << step.u_test << ","
                    << step.max_weight_move << ",";
                if (step.kernel_drift_frob) csv << *step.kernel_drift_frob;
                csv << "\n";
            }
            emit(csv.str(), config.out);
            if (!checkpoint_out.empty()) {
                std::ofstream ck(checkpoint_out);
                if (!ck) throw DataError("cannot write checkpoint '" + checkpoint_out + "'");
                ck << params.to_json() << "\n";
            }
        } else if (equiv_cmd->parsed()) {
            const ExperimentConfig config = equiv_flags.resolve(RegressionMode::GraphLevel);
            const EquivalenceReport report = run_equivalence(config);
            emit(report.to_csv(), config.out);
            return report.any_failed() ? 1 : 0;
        } else if (equiv_node_cmd->parsed()) {
            const ExperimentConfig config = equiv_node_flags.resolve(RegressionMode::NodeLevel);
            const EquivalenceReport report = run_node_equivalence(config);
            emit(report.to_csv(), config.out);
            return report.any_failed() ? 1 : 0;
        } else if (conc_cmd->parsed()) {
            const ExperimentConfig config = conc_flags.resolve(RegressionMode::GraphLevel);
            emit(run_concentration(config).to_csv(), config.out);
        } else if (drift_cmd->parsed()) {
            const ExperimentConfig config = drift_flags.resolve(RegressionMode::GraphLevel);
            const DriftRunReport report = run_drift(config);
            emit(report.to_csv(), config.out);
            return report.any_failed() ? 1 : 0;
        } else if (spectral_cmd->parsed()) {
            const SelfLoopPolicy pol = self_loop_policy_from_string(sp_policy);
            KernelMatrix kernel;
            double mc_se = 0.0;
            if (!sp_kernel.empty()) {
                kernel = KernelMatrix::from_csv(slurp(sp_kernel));
            } else if (!sp_data.empty()) {
                const GraphDataset ds = load_dataset(sp_data);
                if (sp_check == "shifted") {
                    const McKernel mc = shifted_gntk_gram(ds, pol, sp_bias, sp_width, sp_seed);
                    kernel = mc.kernel;
                    mc_se = mc.stderrs.norm();
                } else {
                    kernel = gntk_gram(ds, pol);
                }
            } else {
                throw ConfigError("spectral: need --kernel or --data");
            }
            const SpectralResult extremes = lambda_extremes(kernel);
            std::ostringstream json;
            json.precision(17);
            json << "{\"lambda_min\": " << extremes.lambda_min
                 << ", \"lambda_max\": " << extremes.lambda_max
                 << ", \"iterations\": " << extremes.iterations
                 << ", \"residual\": " << extremes.residual;
            const int count = kernel.size();
            if (sp_check == "separation") {
                const SeparationReport rep = check_separation_bound(kernel, sp_delta, count);
                json << ", \"separation\": {\"bound\": " << rep.bound
                     << ", \"holds\": " << (rep.holds ? "true" : "false")
                     << ", \"degenerate\": " << (rep.degenerate_separation ? "true" : "false")
                     << ", \"unit_norm_attested\": "
                     << (rep.unit_norm_attested ? "true" : "false") << "}";
            } else if (sp_check == "shifted") {
                const ShiftedBoundsReport rep =
                    check_shifted_bounds(kernel, sp_bias, sp_delta, count, mc_se);
                json << ", \"shifted\": {\"lower_bound\": " << rep.lower_bound
                     << ", \"upper_bound\": " << rep.upper_bound
                     << ", \"mc_margin\": " << rep.mc_margin
                     << ", \"lower_holds\": " << (rep.lower_holds ? "true" : "false")
                     << ", \"upper_holds\": " << (rep.upper_holds ? "true" : "false") << "}";
            }
            json << "}\n";
            emit(json.str(), sp_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
