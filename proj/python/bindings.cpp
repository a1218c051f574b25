#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gntk/dynamics.hpp"
#include "gntk/gnn.hpp"
#include "gntk/graph.hpp"
#include "gntk/kernels.hpp"
#include "gntk/lab.hpp"
#include "gntk/multinet.hpp"
#include "gntk/regression.hpp"
#include "gntk/spectral.hpp"

namespace py = pybind11;
using namespace gntk;

namespace {

Graph make_graph(int num_nodes, const Eigen::MatrixXd& features,
                 const std::vector<std::pair<int, int>>& edges) {
    return Graph::from_edges(num_nodes, features, edges);
}

SelfLoopPolicy policy_of(const std::string& s) { return self_loop_policy_from_string(s); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Graph neural tangent kernel laboratory (C++ core)";

    py::register_exception<DataError>(m, "DataError");
    py::register_exception<ConfigError>(m, "ConfigError");

    py::class_<Graph>(m, "Graph")
        .def(py::init(&make_graph), py::arg("num_nodes"), py::arg("features"), py::arg("edges"))
        .def_readonly("num_nodes", &Graph::num_nodes)
        .def_readonly("features", &Graph::features)
        .def("edge_list", &Graph::edge_list)
        .def_property_readonly("feature_dim", &Graph::feature_dim);

    py::class_<GraphDataset>(m, "GraphDataset")
        .def_readonly("graphs", &GraphDataset::graphs)
        .def_readonly("labels", &GraphDataset::labels)
        .def_property_readonly("mode", [](const GraphDataset& d) { return to_string(d.mode); });

    py::class_<KernelMatrix>(m, "KernelMatrix")
        .def_readonly("values", &KernelMatrix::values)
        .def_property_readonly("provenance",
                               [](const KernelMatrix& k) { return k.provenance.describe(); })
        .def("to_csv", &KernelMatrix::to_csv);

    py::class_<GnnParams>(m, "GnnParams")
        .def_readonly("weights", &GnnParams::weights)
        .def_readonly("signs", &GnnParams::signs)
        .def_readonly("bias", &GnnParams::bias)
        .def_readonly("kappa", &GnnParams::kappa)
        .def("to_json", &GnnParams::to_json)
        .def_static("from_json", &GnnParams::from_json);

    py::class_<SpectralResult>(m, "SpectralResult")
        .def_readonly("lambda_min", &SpectralResult::lambda_min)
        .def_readonly("lambda_max", &SpectralResult::lambda_max)
        .def_readonly("iterations", &SpectralResult::iterations)
        .def_readonly("residual", &SpectralResult::residual);

    m.def(
        "aggregate_features",
        [](const Graph& g, const std::string& policy) {
            return aggregate_features(g, policy_of(policy));
        },
        py::arg("graph"), py::arg("policy") = "include");

    m.def("delta_separation", &delta_separation, py::arg("columns"));

    m.def(
        "generate_separated_dataset",
        [](int n, int num_nodes, int dim, double delta, double edge_prob, std::uint64_t seed,
           const std::string& mode, const std::string& policy) {
            GeneratorConfig config;
            config.n = n;
            config.num_nodes = num_nodes;
            config.dim = dim;
            config.delta_target = delta;
            config.edge_prob = edge_prob;
            config.seed = seed;
            config.mode = regression_mode_from_string(mode);
            config.policy = policy_of(policy);
            return generate_separated_dataset(config);
        },
        py::arg("n"), py::arg("num_nodes"), py::arg("dim"), py::arg("delta"),
        py::arg("edge_prob") = 0.5, py::arg("seed") = 0, py::arg("mode") = "graph",
        py::arg("policy") = "include");

    m.def("load_dataset", &load_dataset, py::arg("path"));
    m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));

    m.def("coactivation_probability", &coactivation_probability, py::arg("cos_angle"));
    m.def(
        "gauss_relu_moments",
        [](const Eigen::Matrix2d& lambda) {
            const ReluMoments mom = gauss_relu_moments(lambda);
            return py::make_tuple(mom.sigma, mom.sigma_dot, mom.degenerate);
        },
        py::arg("lambda_2x2"));
    m.def("gntk_graph_pair", &gntk_graph_pair, py::arg("agg_g"), py::arg("agg_h"));
    m.def(
        "gntk_gram",
        [](const GraphDataset& d, const std::string& policy) {
            return gntk_gram(d, policy_of(policy));
        },
        py::arg("dataset"), py::arg("policy") = "include");
    m.def(
        "mc_gntk_gram",
        [](const GraphDataset& d, const std::string& policy, long width, std::uint64_t seed) {
            return mc_gntk_gram(d, policy_of(policy), width, seed).kernel;
        },
        py::arg("dataset"), py::arg("policy"), py::arg("m"), py::arg("seed"));
    m.def(
        "shifted_gntk_gram",
        [](const GraphDataset& d, const std::string& policy, double bias, long width,
           std::uint64_t seed) {
            const McKernel k = shifted_gntk_gram(d, policy_of(policy), bias, width, seed);
            return py::make_tuple(k.kernel, k.stderrs);
        },
        py::arg("dataset"), py::arg("policy"), py::arg("bias"), py::arg("m"), py::arg("seed"));
    m.def(
        "node_gntk",
        [](const Graph& g, const std::string& policy, int levels, int layers, bool strict) {
            NodeGntkOptions options;
            options.levels = levels;
            options.layers = layers;
            options.strict_paper_init = strict;
            return node_gntk(g, policy_of(policy), options).kernel;
        },
        py::arg("graph"), py::arg("policy") = "include", py::arg("levels") = 1,
        py::arg("layers") = 1, py::arg("strict_paper_init") = false);

    m.def("init_params", &init_params, py::arg("dim"), py::arg("width"), py::arg("bias"),
          py::arg("kappa"), py::arg("seed"));
    m.def("forward_graph", &forward_graph, py::arg("params"), py::arg("agg"));
    m.def("forward_node", &forward_node, py::arg("params"), py::arg("agg"), py::arg("node_index"));
    m.def("grad_graph", &grad_graph, py::arg("params"), py::arg("agg"));
    m.def(
        "train_gd",
        [](GnnParams& params, const std::vector<Eigen::MatrixXd>& samples,
           const Eigen::VectorXd& labels, const Eigen::MatrixXd& test_sample, double eta,
           long steps, long trace_every) {
            TrainOptions options;
            options.eta = eta;
            options.steps = steps;
            options.trace_every = trace_every;
            const TrainTrace trace = train_gd(params, samples, labels, test_sample, options);
            py::list out;
            for (const TraceStep& s : trace.steps) {
                py::dict row;
                row["t"] = s.t;
                row["loss"] = s.loss;
                row["u_train"] = s.u_train;
                row["u_test"] = s.u_test;
                row["max_weight_move"] = s.max_weight_move;
                out.append(row);
            }
            return out;
        },
        py::arg("params"), py::arg("samples"), py::arg("labels"), py::arg("test_sample"),
        py::arg("eta") = 0.0, py::arg("steps") = 0, py::arg("trace_every") = 1);

    m.def(
        "multinet_ntk",
        [](const Graph& g, const std::string& policy, int levels, int layers, int width,
           std::uint64_t seed, int probes) {
            const MultiNet net = init_multinet(g.feature_dim(), levels, layers, width, seed);
            EmpiricalNtkOptions options;
            options.probes = probes;
            options.seed = seed;
            return empirical_ntk_node(net, g, policy_of(policy), options);
        },
        py::arg("graph"), py::arg("policy"), py::arg("levels"), py::arg("layers"),
        py::arg("width"), py::arg("seed"), py::arg("probes") = 0);

    m.def(
        "solve_exact",
        [](const KernelMatrix& gram, const Eigen::VectorXd& k_test, const Eigen::VectorXd& y) {
            const ExactSolution s = solve_exact(gram, k_test, y);
            return py::make_tuple(s.u_test_star, s.u_star, s.lambda_min);
        },
        py::arg("gram"), py::arg("k_test"), py::arg("labels"));
    m.def(
        "iterate_regression",
        [](const KernelMatrix& gram, const Eigen::VectorXd& k_test, const Eigen::VectorXd& y,
           double kappa, double eta, long steps) {
            RegressionProblem problem{gram, k_test, y, kappa, eta, steps};
            const RegressionTrace trace = iterate_regression(problem);
            return py::make_tuple(trace.final().u, trace.final().u_test);
        },
        py::arg("gram"), py::arg("k_test"), py::arg("labels"), py::arg("kappa"), py::arg("eta"),
        py::arg("steps"));

    m.def(
        "dynamic_gram",
        [](const GnnParams& params, const GraphDataset& d, const std::string& policy) {
            return dynamic_gram(params, d, policy_of(policy));
        },
        py::arg("params"), py::arg("dataset"), py::arg("policy") = "include");

    m.def("lambda_extremes",
          [](const Eigen::MatrixXd& matrix) { return lambda_extremes(matrix); },
          py::arg("matrix"));

    m.def(
        "run_equivalence",
        [](const std::string& config_json) {
            const ExperimentConfig config = ExperimentConfig::from_json(config_json);
            const EquivalenceReport report = config.mode == RegressionMode::GraphLevel
                                                 ? run_equivalence(config)
                                                 : run_node_equivalence(config);
            return report.to_csv();
        },
        py::arg("config_json"));
}
