#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gntk/lab.hpp"

using namespace gntk;

namespace {

ExperimentConfig tiny_graph_config() {
    ExperimentConfig config;
    config.mode = RegressionMode::GraphLevel;
    GeneratorConfig gen;
    gen.n = 3;
    gen.num_nodes = 2;
    gen.dim = 3;
    gen.delta_target = 0.2;
    gen.edge_prob = 0.5;
    gen.seed = 91;
    config.generator = gen;
    config.widths = {32};
    config.seeds = {0};
    config.steps = 50;
    config.kappa = 0.25;
    return config;
}

}  // namespace

TEST_CASE("experiment config JSON round trip") {
    ExperimentConfig config = tiny_graph_config();
    config.widths = {16, 64};
    config.seeds = {3, 4, 5};
    config.eta = 0.125;
    config.out = "report.csv";
    const ExperimentConfig back = ExperimentConfig::from_json(config.to_json());
    CHECK(back.mode == config.mode);
    CHECK(back.widths == config.widths);
    CHECK(back.seeds == config.seeds);
    CHECK(back.eta == config.eta);
    CHECK(back.kappa == config.kappa);
    CHECK(back.generator.has_value());
    CHECK(back.generator->num_nodes == config.generator->num_nodes);
    CHECK(back.out == config.out);
}

TEST_CASE("config validation catches unordered widths and empty seeds") {
    ExperimentConfig config = tiny_graph_config();
    config.widths = {64, 16};
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.widths = {16};
    config.seeds = {};
    CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("run_equivalence: one width and one seed give exactly one row") {
    const EquivalenceReport report = run_equivalence(tiny_graph_config());
    REQUIRE(report.rows.size() == 1);
    CHECK(!report.rows[0].failed);
    CHECK(report.rows[0].width == 32);
    CHECK(report.rows[0].gap_gnn_vs_exact >= 0.0);
    CHECK(report.rows[0].lambda_min > 0.0);
}

TEST_CASE("run_equivalence: iterative gap at T is no worse than at T/2") {
    ExperimentConfig config = tiny_graph_config();
    config.steps = 200;
    const EquivalenceReport report = run_equivalence(config);
    for (const EquivalenceRow& row : report.rows)
        CHECK(row.gap_gntkiter_vs_exact <= row.gap_gntkiter_half + 1e-12);
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
    ExperimentConfig config = tiny_graph_config();
    config.widths = {16, 32};
    config.seeds = {0, 1};
    const std::string first = run_equivalence(config).to_csv();
    const std::string second = run_equivalence(config).to_csv();
    CHECK(first == second);

    setenv("GNTK_LAB_THREADS", "1", 1);
    const std::string single = run_equivalence(config).to_csv();
    unsetenv("GNTK_LAB_THREADS");
    CHECK(first == single);
}

TEST_CASE("run_node_equivalence: transductive split shape and zero-label case") {
    ExperimentConfig config;
    config.mode = RegressionMode::NodeLevel;
    GeneratorConfig gen;
    gen.n = 1;
    gen.num_nodes = 4;
    gen.dim = 3;
    gen.delta_target = 0.2;
    gen.edge_prob = 0.6;
    gen.seed = 93;
    gen.mode = RegressionMode::NodeLevel;
    config.generator = gen;
    config.widths = {16, 32};
    config.seeds = {0, 1};
    config.steps = 40;
    const EquivalenceReport report = run_node_equivalence(config);
    CHECK(report.rows.size() == 4);
    for (const EquivalenceRow& row : report.rows) CHECK(!row.failed);

    // With zero labels the exact predictor is zero and both gaps collapse to
    // |u_test(T)| of each route.
    const ExperimentData data = prepare_experiment_data(config);
    CHECK(data.samples.size() == 3);
}

TEST_CASE("run_concentration: single width leaves the slope empty") {
    ExperimentConfig config = tiny_graph_config();
    config.widths = {500};
    config.seeds = {0, 1, 2};
    const ConcentrationReport report = run_concentration(config);
    CHECK(report.rows.size() == 3);
    CHECK(!report.median_loglog_slope.has_value());
    for (const ConcentrationRow& row : report.rows) {
        CHECK(row.frob_err >= 0.0);
        CHECK(row.bound > 0.0);
    }
}

TEST_CASE("run_concentration: slope is near -1/2 over two decades") {
    ExperimentConfig config = tiny_graph_config();
    config.widths = {100, 1000, 10000};
    config.seeds = {0, 1, 2, 3, 4};
    const ConcentrationReport report = run_concentration(config);
    REQUIRE(report.median_loglog_slope.has_value());
    CHECK(*report.median_loglog_slope < -0.3);
    CHECK(*report.median_loglog_slope > -0.7);
}

TEST_CASE("run_drift: rows carry the bound series") {
    ExperimentConfig config = tiny_graph_config();
    config.widths = {64};
    config.seeds = {0, 1};
    config.steps = 60;
    config.trace_every = 20;
    const DriftRunReport report = run_drift(config);
    REQUIRE(report.rows.size() == 2);
    for (const DriftRow& row : report.rows) {
        REQUIRE(!row.failed);
        CHECK(row.report.sampled_steps.front() == 0);
        CHECK(row.report.sampled_steps.back() == 60);
        CHECK(row.report.bound_h0 > 0.0);
        for (std::size_t i = 0; i < row.report.sampled_steps.size(); ++i)
            CHECK(row.report.ht_vs_h0_frob[i] <=
                  row.report.bound_drift[i] + (i == 0 ? 1e-12 : 0.0));
    }
}

TEST_CASE("save_report writes the config echo line") {
    const std::string path = std::filesystem::temp_directory_path() / "gntk_report_test.csv";
    const EquivalenceReport report = run_equivalence(tiny_graph_config());
    save_report(report.to_csv(), path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# {", 0) == 0);
    std::getline(in, line);
    CHECK(line == "m,seed,gap_gnn_vs_exact,gap_gntkiter_vs_exact,lambda_min,final_loss,error");
    std::filesystem::remove(path);
}

TEST_CASE("dataset file round trip through the lab loader") {
    GeneratorConfig gen;
    gen.n = 2;
    gen.num_nodes = 3;
    gen.dim = 2;
    gen.delta_target = 0.1;
    gen.seed = 95;
    const GraphDataset ds = generate_separated_dataset(gen);
    const std::string path = std::filesystem::temp_directory_path() / "gntk_ds_test.json";
    save_dataset(ds, path);
    const GraphDataset back = load_dataset(path);
    CHECK(back.graphs.size() == ds.graphs.size());
    CHECK((back.labels - ds.labels).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}
