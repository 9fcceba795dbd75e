#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hsp/data_matrix.hpp"
#include "hsp/rng.hpp"
#include "hsp/tuning.hpp"

using namespace hsp;

namespace {

/// Two subject groups with distinct condition partitions over six conditions.
DataMatrix toy_data() {
    Rng rng(4242);
    DataMatrix data(6, 8);
    const std::vector<std::vector<int>> pattern = {{1, 1, 1, 2, 2, 2}, {1, 2, 1, 2, 1, 2}};
    const std::vector<double> means = {-1.0, 1.0};
    for (int j = 0; j < 8; ++j) {
        const auto& labels = pattern[static_cast<std::size_t>(j / 4)];
        for (int i = 0; i < 6; ++i)
            data(i, j) = means[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)] + rng.normal(0.0, 0.3);
    }
    return standardize(data);
}

Hyperparams toy_hyperparams(const DataMatrix& data) {
    Hyperparams h = Hyperparams::defaults_for(data);
    h.c0 = canonicalize(std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2});
    h.nu0 = canonicalize(std::vector<int>{1, 1, 1, 2, 2, 2});
    return h;
}

SamplerConfig toy_config() {
    SamplerConfig cfg;
    cfg.iterations = 300;
    cfg.burn_in = 100;
    cfg.seed = 31337;
    return cfg;
}

} // namespace

TEST_CASE("plateau rule picks the first value where the gain stalls") {
    const double threshold = 0.02;
    // rising then flat: stalls at the third point
    CHECK(plateau_pick_index(std::vector<double>{0.1, 0.4, 0.8, 0.805, 0.81}, threshold) == 2);
    // strictly rising: the last point
    CHECK(plateau_pick_index(std::vector<double>{0.1, 0.2, 0.3, 0.5}, threshold) == 3);
    // peaked: the peak itself (the step after it is a decrease)
    CHECK(plateau_pick_index(std::vector<double>{0.1, 0.6, 0.9, 0.7, 0.5}, threshold) == 2);
    // single value
    CHECK(plateau_pick_index(std::vector<double>{0.42}, threshold) == 0);
    // flat from the start: the first value
    CHECK(plateau_pick_index(std::vector<double>{0.5, 0.5, 0.5}, threshold) == 0);
    CHECK_THROWS_AS(plateau_pick_index(std::vector<double>{}, threshold), std::invalid_argument);
}

TEST_CASE("grid specs are validated") {
    GridSpec g;
    g.parameter = "lambda";
    g.values = {1.0, 2.0};
    CHECK_NOTHROW(g.validate());
    g.parameter = "sigma";
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.parameter = "rho";
    g.values = {2.0, 1.0};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.values = {};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.values = {-1.0, 1.0};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("grid_sensitivity produces one ordered row per grid value") {
    const DataMatrix data = toy_data();
    const Hyperparams h = toy_hyperparams(data);
    GridSpec grid;
    grid.parameter = "lambda";
    grid.values = {0.5, 2.0, 6.0};
    grid.fixed_rho = 1.0;
    grid.fixed_tau = 0.0;
    const SensitivityTable table = grid_sensitivity(data, h, grid, toy_config());
    REQUIRE(table.size() == 3);
    CHECK(table[0].value == 0.5);
    CHECK(table[1].value == 2.0);
    CHECK(table[2].value == 6.0);
    for (const auto& row : table) {
        CHECK(row.subject_ari <= 1.0);
        CHECK(row.condition_ari <= 1.0);
        CHECK(row.subject_f1 >= 0.0);
        CHECK(row.subject_f1 <= 1.0);
    }
}

TEST_CASE("grid_sensitivity is deterministic under a fixed seed") {
    const DataMatrix data = toy_data();
    const Hyperparams h = toy_hyperparams(data);
    GridSpec grid;
    grid.parameter = "rho";
    grid.values = {1.0, 4.0};
    grid.fixed_lambda = 2.0;
    grid.chains = 2;
    const SensitivityTable a = grid_sensitivity(data, h, grid, toy_config());
    const SensitivityTable b = grid_sensitivity(data, h, grid, toy_config());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].subject_ari == b[i].subject_ari);
        CHECK(a[i].subject_f1 == b[i].subject_f1);
        CHECK(a[i].condition_ari == b[i].condition_ari);
        CHECK(a[i].condition_f1 == b[i].condition_f1);
    }
}

TEST_CASE("single-value grids select those values directly") {
    const DataMatrix data = toy_data();
    const Hyperparams h = toy_hyperparams(data);
    GridSpec gl, gr, gt;
    gl.parameter = "lambda";
    gl.values = {2.5};
    gr.parameter = "rho";
    gr.values = {1.5};
    gt.parameter = "tau";
    gt.values = {0.5};
    Rng rng(1);
    const HeuristicResult result = heuristic_select(data, h, gl, gr, gt, toy_config(), rng);
    CHECK(result.lambda == 2.5);
    CHECK(result.rho == 1.5);
    CHECK(result.tau == 0.5);
    CHECK(result.initial_rho == 1.5);
    CHECK(result.lambda_table.size() == 1);
    CHECK(result.rho_table.size() == 1);
    CHECK(result.tau_table.size() == 1);
}

TEST_CASE("heuristic_select stays inside the grids and honors a pinned rho") {
    const DataMatrix data = toy_data();
    const Hyperparams h = toy_hyperparams(data);
    GridSpec gl, gr, gt;
    gl.parameter = "lambda";
    gl.values = {0.5, 2.0, 4.0};
    gr.parameter = "rho";
    gr.values = {1.0, 4.0};
    gt.parameter = "tau";
    gt.values = {0.0, 1.0, 2.0};
    Rng rng(2);
    const HeuristicResult result = heuristic_select(data, h, gl, gr, gt, toy_config(), rng, 0.02, 4.0);
    CHECK(result.initial_rho == 4.0);
    CHECK(std::count(gl.values.begin(), gl.values.end(), result.lambda) == 1);
    CHECK(std::count(gr.values.begin(), gr.values.end(), result.rho) == 1);
    CHECK(std::count(gt.values.begin(), gt.values.end(), result.tau) == 1);
    CHECK(result.lambda_table.size() == 3);
    CHECK(result.rho_table.size() == 2);
    CHECK(result.tau_table.size() == 3);

    // grids must cover the right parameters
    CHECK_THROWS_AS(heuristic_select(data, h, gr, gl, gt, toy_config(), rng), std::invalid_argument);
}

TEST_CASE("grid_sensitivity attaches the grid value to sampler failures") {
    DataMatrix raw(6, 8); // not standardized: run_chain will refuse it
    Rng rng(5);
    for (double& v : raw.values) v = rng.normal(0.0, 1.0);
    const Hyperparams h = toy_hyperparams(raw);
    GridSpec grid;
    grid.parameter = "lambda";
    grid.values = {1.25};
    try {
        grid_sensitivity(raw, h, grid, toy_config());
        FAIL("expected a propagated sampler failure");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("lambda = 1.25") != std::string::npos);
    }
}

TEST_CASE("subject scores improve with informative tau on the toy data") {
    // as tau grows with c0 equal to the truth, the estimated subject partition
    // should match c0 at least as well
    const DataMatrix data = toy_data();
    const Hyperparams h = toy_hyperparams(data);
    GridSpec grid;
    grid.parameter = "tau";
    grid.values = {0.0, 8.0};
    grid.fixed_lambda = 2.0;
    grid.fixed_rho = 0.0;
    const SensitivityTable table = grid_sensitivity(data, h, grid, toy_config());
    CHECK(table[1].subject_ari >= table[0].subject_ari - 1e-12);
}
