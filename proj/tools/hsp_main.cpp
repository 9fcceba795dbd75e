// Batch command-line front end: fit, simulate, metrics, summarize, tune.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsp/hsp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

std::string resolve_out_dir(const std::string& cli_out, const std::string& config_out) {
    if (!cli_out.empty()) return cli_out;
    if (!config_out.empty()) return config_out;
    if (const char* env = std::getenv("HSP_OUT_DIR"); env && *env) return env;
    return ".";
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw hsp::DataError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

/// Grid flag values are either an inline comma list ("1,1.5,2") or a path to
/// a file of whitespace/comma-separated numbers.
std::vector<double> parse_grid_values(const std::string& arg) {
    std::string text = arg;
    bool numeric = !arg.empty() && arg.find_first_not_of("0123456789.,eE+- ") == std::string::npos;
    if (!numeric) {
        std::ifstream in(arg);
        if (!in) throw hsp::DataError("cannot open grid file '" + arg + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    for (char& c : text)
        if (c == ',' || c == '\n' || c == '\t' || c == '\r') c = ' ';
    std::vector<double> values;
    std::stringstream ss(text);
    std::string tok;
    while (ss >> tok) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') throw hsp::DataError("bad grid value '" + tok + "'");
        values.push_back(v);
    }
    if (values.empty()) throw hsp::DataError("empty grid '" + arg + "'");
    return values;
}

/// VI point estimates and co-clustering matrices from a trace. Per-group
/// condition matrices condition on the estimated subject partition and pool
/// the pi_j samples of each group's subjects.
void write_posterior_summaries(const hsp::PartitionTrace& trace, const std::vector<std::string>& subject_names,
                               const std::vector<std::string>& condition_names, const std::string& out_dir) {
    const auto J = trace.condition_partitions.front().size();

    const hsp::Partition c_hat = hsp::vi_point_estimate(trace.subject_partitions);
    hsp::write_partition_file(std::vector<hsp::Partition>{c_hat}, join_path(out_dir, "estimate_c.txt"));

    std::vector<hsp::Partition> pi_hats;
    std::vector<hsp::Partition> samples(trace.subject_partitions.size());
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t t = 0; t < samples.size(); ++t) samples[t] = trace.condition_partitions[t][j];
        pi_hats.push_back(hsp::vi_point_estimate(samples));
    }
    hsp::write_partition_file(pi_hats, join_path(out_dir, "estimate_pi.txt"));

    hsp::CoClusterMatrix subj = hsp::coclustering_matrix(trace.subject_partitions);
    subj.item_names = subject_names;
    hsp::write_coclustering_csv(subj, join_path(out_dir, "coclust_subjects.csv"));

    for (int g = 1; g <= c_hat.num_clusters(); ++g) {
        std::vector<hsp::Partition> group_samples;
        for (std::size_t j = 0; j < J; ++j) {
            if (c_hat.label(static_cast<int>(j)) != g) continue;
            for (const auto& per_subject : trace.condition_partitions) group_samples.push_back(per_subject[j]);
        }
        hsp::CoClusterMatrix cond = hsp::coclustering_matrix(group_samples);
        cond.item_names = condition_names;
        hsp::write_coclustering_csv(cond, join_path(out_dir, "coclust_conditions_group" + std::to_string(g) + ".csv"));
    }
}

int cmd_fit(const std::string& config_path, std::optional<std::uint64_t> seed_override, const std::string& cli_out) {
    hsp::RunConfig cfg = hsp::parse_run_config(config_path);
    if (seed_override) cfg.sampler.seed = *seed_override;
    if (cfg.data_path.empty()) throw hsp::DataError(config_path + ": missing 'data' entry");
    const std::string out_dir = resolve_out_dir(cli_out, cfg.out_dir);
    ensure_dir(out_dir);

    hsp::DataMatrix data = hsp::read_data_csv(cfg.data_path);
    if (!cfg.sampler.prior_only) data = hsp::standardize(data);
    const hsp::Hyperparams h = cfg.make_hyperparams(data);

    const hsp::ChainResult result = hsp::run_chain(data, h, cfg.sampler);

    hsp::write_trace(result.trace, join_path(out_dir, "trace.txt"), "run_meta.json", cfg.sampler.burn_in,
                     cfg.sampler.thin);
    {
        std::ofstream meta(join_path(out_dir, "run_meta.json"));
        meta << hsp::run_metadata_json(cfg, h, result, data.n_conditions, data.n_subjects).dump(2) << '\n';
    }
    write_posterior_summaries(result.trace, data.subject_names, data.condition_names, out_dir);
    return kExitOk;
}

int cmd_simulate(const std::string& scenario, int replicates, std::uint64_t seed, const std::string& cli_out) {
    const std::string out_dir = resolve_out_dir(cli_out, "");
    ensure_dir(out_dir);
    std::string stem = scenario;
    for (char& c : stem)
        if (c == ':') c = '-';
    hsp::Rng root(seed);
    for (int r = 1; r <= replicates; ++r) {
        hsp::Rng rng = root.derive(static_cast<std::uint64_t>(r));
        hsp::SyntheticDataset ds = hsp::generate_scenario(scenario, rng);
        ds.seed = hsp::Rng::derive_seed(seed, static_cast<std::uint64_t>(r));
        char suffix[32];
        std::snprintf(suffix, sizeof(suffix), "_rep%03d", r);
        hsp::write_data_csv(ds.data, join_path(out_dir, stem + suffix + ".csv"));
        hsp::write_dataset_sidecar(ds, join_path(out_dir, stem + suffix + "_truth.json"));
    }
    return kExitOk;
}

int cmd_metrics(const std::string& path_a, const std::string& path_b) {
    const auto a = hsp::read_partition_file(path_a);
    const auto b = hsp::read_partition_file(path_b);
    if (a.size() != b.size())
        throw hsp::DataError("partition files differ in line count (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    std::printf("ari,f1,vi\n");
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::printf("%s,%s,%s\n", hsp::format_double(hsp::adjusted_rand_index(a[i], b[i])).c_str(),
                    hsp::format_double(hsp::symmetrized_f1(a[i], b[i])).c_str(),
                    hsp::format_double(hsp::variation_of_information(a[i], b[i])).c_str());
    }
    return kExitOk;
}

int cmd_summarize(const std::string& trace_path, const std::string& cli_out) {
    const hsp::PartitionTrace trace = hsp::read_trace(trace_path);
    const std::string out_dir = resolve_out_dir(cli_out, "");
    ensure_dir(out_dir);
    const auto J = trace.condition_partitions.front().size();
    const auto I = static_cast<std::size_t>(trace.condition_partitions.front().front().n_items());
    std::vector<std::string> subject_names, condition_names;
    for (std::size_t j = 0; j < J; ++j) subject_names.push_back("S" + std::to_string(j + 1));
    for (std::size_t i = 0; i < I; ++i) condition_names.push_back("C" + std::to_string(i + 1));
    write_posterior_summaries(trace, subject_names, condition_names, out_dir);
    return kExitOk;
}

int cmd_tune(const std::string& config_path, const std::string& grid_lambda, const std::string& grid_rho,
             const std::string& grid_tau, int chains, std::int64_t grid_iterations, double plateau,
             std::optional<double> initial_rho, std::optional<std::uint64_t> seed_override,
             const std::string& cli_out) {
    hsp::RunConfig cfg = hsp::parse_run_config(config_path);
    if (seed_override) cfg.sampler.seed = *seed_override;
    if (cfg.data_path.empty()) throw hsp::DataError(config_path + ": missing 'data' entry");
    const std::string out_dir = resolve_out_dir(cli_out, cfg.out_dir);
    ensure_dir(out_dir);

    hsp::DataMatrix data = hsp::standardize(hsp::read_data_csv(cfg.data_path));
    const hsp::Hyperparams h = cfg.make_hyperparams(data);

    auto make_grid = [&](const std::string& name, const std::string& arg) {
        hsp::GridSpec g;
        g.parameter = name;
        g.values = parse_grid_values(arg);
        g.chains = chains;
        g.iterations = grid_iterations;
        return g;
    };
    hsp::Rng rng(cfg.sampler.seed);
    const hsp::HeuristicResult result =
        hsp::heuristic_select(data, h, make_grid("lambda", grid_lambda), make_grid("rho", grid_rho),
                              make_grid("tau", grid_tau), cfg.sampler, rng, plateau, initial_rho);

    hsp::write_sensitivity_csv(result.lambda_table, "lambda", join_path(out_dir, "sensitivity_lambda.csv"));
    hsp::write_sensitivity_csv(result.rho_table, "rho", join_path(out_dir, "sensitivity_rho.csv"));
    hsp::write_sensitivity_csv(result.tau_table, "tau", join_path(out_dir, "sensitivity_tau.csv"));
    nlohmann::json selected = {{"lambda", result.lambda},
                               {"rho", result.rho},
                               {"tau", result.tau},
                               {"initial_rho", result.initial_rho},
                               {"plateau_threshold", plateau}};
    std::ofstream out(join_path(out_dir, "selected.json"));
    out << selected.dump(2) << '\n';
    std::printf("selected: lambda=%g rho=%g tau=%g\n", result.lambda, result.rho, result.tau);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical shrinkage partition clustering"};
    app.require_subcommand(1);

    std::string config_path, out_dir, scenario, trace_path, path_a, path_b;
    std::string grid_lambda, grid_rho, grid_tau;
    int replicates = 1, chains = 1;
    std::int64_t grid_iterations = 0;
    double plateau = 0.02;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double initial_rho_value = 0.0;
    bool initial_rho_set = false;

    auto* fit = app.add_subcommand("fit", "Fit the model to a data matrix and write posterior summaries");
    fit->add_option("--config", config_path, "run configuration file")->required();
    fit->add_option("--seed", seed, "override the configured seed")->each([&](const std::string&) { seed_set = true; });
    fit->add_option("--out", out_dir, "output directory");

    auto* sim = app.add_subcommand("simulate", "Generate synthetic datasets with ground truth");
    sim->add_option("--scenario", scenario, "sim1a | sim1b:<level> | sim2 | large | shared")->required();
    sim->add_option("--replicates", replicates, "number of datasets")->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "root seed");
    sim->add_option("--out", out_dir, "output directory");

    auto* met = app.add_subcommand("metrics", "ARI, F1 and VI between two partition files, line by line");
    met->add_option("file_a", path_a, "first partition file")->required();
    met->add_option("file_b", path_b, "second partition file")->required();

    auto* sum = app.add_subcommand("summarize", "Point estimates and co-clustering matrices from a trace");
    sum->add_option("trace", trace_path, "trace file")->required();
    sum->add_option("--out", out_dir, "output directory");

    auto* tune = app.add_subcommand("tune", "Step-by-step shrinkage parameter selection");
    tune->add_option("--config", config_path, "run configuration file")->required();
    tune->add_option("--grid-lambda", grid_lambda, "lambda grid: comma list or file")->required();
    tune->add_option("--grid-rho", grid_rho, "rho grid: comma list or file")->required();
    tune->add_option("--grid-tau", grid_tau, "tau grid: comma list or file")->required();
    tune->add_option("--chains", chains, "chains per grid point")->check(CLI::PositiveNumber);
    tune->add_option("--grid-iterations", grid_iterations, "iterations per grid point (default: config value)");
    tune->add_option("--plateau", plateau, "plateau threshold on the score gain per step");
    tune->add_option("--initial-rho", initial_rho_value, "pin the provisional rho instead of drawing it")
        ->each([&](const std::string&) { initial_rho_set = true; });
    tune->add_option("--seed", seed, "override the configured seed")->each([&](const std::string&) { seed_set = true; });
    tune->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fit->parsed())
            return cmd_fit(config_path, seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt, out_dir);
        if (sim->parsed()) {
            if (scenario != "sim1a" && scenario != "sim2" && scenario != "large" && scenario != "shared" &&
                scenario.rfind("sim1b:", 0) != 0) {
                std::fprintf(stderr, "unknown scenario '%s'\n", scenario.c_str());
                return kExitUsage;
            }
            return cmd_simulate(scenario, replicates, seed, out_dir);
        }
        if (met->parsed()) return cmd_metrics(path_a, path_b);
        if (sum->parsed()) return cmd_summarize(trace_path, out_dir);
        if (tune->parsed())
            return cmd_tune(config_path, grid_lambda, grid_rho, grid_tau, chains, grid_iterations, plateau,
                            initial_rho_set ? std::optional<double>(initial_rho_value) : std::nullopt,
                            seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt, out_dir);
        return kExitUsage;
    } catch (const hsp::DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
}
