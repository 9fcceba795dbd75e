#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsp/data_matrix.hpp"
#include "hsp/error.hpp"
#include "hsp/metrics.hpp"
#include "hsp/model.hpp"
#include "hsp/parallel.hpp"
#include "hsp/sampler.hpp"

namespace hsp {

/// One shrinkage-parameter sweep: vary `parameter` over `values` while the
/// other two stay at their fixed settings.
struct GridSpec {
    std::string parameter; // lambda | rho | tau
    std::vector<double> values;
    double fixed_lambda = 0.0;
    double fixed_rho = 0.0;
    double fixed_tau = 0.0;
    int chains = 1;
    std::int64_t iterations = 0; // 0 = take from the SamplerConfig

    void validate() const {
        if (parameter != "lambda" && parameter != "rho" && parameter != "tau")
            throw std::invalid_argument("GridSpec: parameter must be lambda, rho or tau");
        if (values.empty()) throw std::invalid_argument("GridSpec: empty grid");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] < 0.0) throw std::invalid_argument("GridSpec: grid values must be non-negative");
            if (i > 0 && values[i] <= values[i - 1])
                throw std::invalid_argument("GridSpec: grid values must be strictly ascending");
        }
        if (chains < 1) throw std::invalid_argument("GridSpec: chains must be >= 1");
    }
};

/// Similarity of the estimated partitions to the base partitions at one grid
/// value: subject scores compare the estimated c with c0, condition scores
/// compare each estimated pi_j with nu0, averaged over subjects (and over
/// chains when a grid point runs several).
struct SensitivityRow {
    double value = 0.0;
    double subject_ari = 0.0;
    double subject_f1 = 0.0;
    double condition_ari = 0.0;
    double condition_f1 = 0.0;
};

using SensitivityTable = std::vector<SensitivityRow>;

namespace detail {

inline SensitivityRow score_chain_against_bases(const PartitionTrace& trace, const Hyperparams& h) {
    SensitivityRow row;
    const Partition c_hat = vi_point_estimate(trace.subject_partitions);
    row.subject_ari = adjusted_rand_index(c_hat, h.c0);
    row.subject_f1 = symmetrized_f1(c_hat, h.c0);
    const auto J = trace.condition_partitions.front().size();
    std::vector<Partition> pi_samples(trace.subject_partitions.size());
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t t = 0; t < pi_samples.size(); ++t) pi_samples[t] = trace.condition_partitions[t][j];
        const Partition pi_hat = vi_point_estimate(pi_samples);
        row.condition_ari += adjusted_rand_index(pi_hat, h.nu0);
        row.condition_f1 += symmetrized_f1(pi_hat, h.nu0);
    }
    row.condition_ari /= static_cast<double>(J);
    row.condition_f1 /= static_cast<double>(J);
    return row;
}

} // namespace detail

/// Run the sampler at every grid value and report base-partition similarity
/// scores, rows ordered by grid value. Grid points (and their chains) run in
/// parallel on derived seeds. Sampler failures are rethrown with the grid
/// value attached.
inline SensitivityTable grid_sensitivity(const DataMatrix& data, const Hyperparams& h, const GridSpec& grid,
                                         const SamplerConfig& cfg) {
    grid.validate();
    cfg.validate();
    SamplerConfig point_cfg = cfg;
    if (grid.iterations > 0) {
        point_cfg.iterations = grid.iterations;
        if (point_cfg.burn_in >= point_cfg.iterations) point_cfg.burn_in = point_cfg.iterations / 5;
    }
    const int n_points = static_cast<int>(grid.values.size());
    const int n_tasks = n_points * grid.chains;
    std::vector<SensitivityRow> chain_rows(static_cast<std::size_t>(n_tasks));
    std::vector<std::string> failures(static_cast<std::size_t>(n_tasks));
    parallel_for(n_tasks, [&](int task) {
        const int point = task / grid.chains;
        Hyperparams hp = h;
        hp.lambda = grid.parameter == "lambda" ? grid.values[static_cast<std::size_t>(point)] : grid.fixed_lambda;
        hp.rho = grid.parameter == "rho" ? grid.values[static_cast<std::size_t>(point)] : grid.fixed_rho;
        hp.tau = grid.parameter == "tau" ? grid.values[static_cast<std::size_t>(point)] : grid.fixed_tau;
        SamplerConfig run_cfg = point_cfg;
        run_cfg.seed = Rng::derive_seed(point_cfg.seed, static_cast<std::uint64_t>(task));
        try {
            const ChainResult result = run_chain(data, hp, run_cfg);
            chain_rows[static_cast<std::size_t>(task)] = detail::score_chain_against_bases(result.trace, hp);
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(task)] =
                grid.parameter + " = " + std::to_string(grid.values[static_cast<std::size_t>(point)]) + ": " + e.what();
        }
    });
    for (const auto& f : failures)
        if (!f.empty()) throw std::runtime_error("grid_sensitivity: " + f);

    SensitivityTable table(static_cast<std::size_t>(n_points));
    for (int point = 0; point < n_points; ++point) {
        SensitivityRow& row = table[static_cast<std::size_t>(point)];
        row.value = grid.values[static_cast<std::size_t>(point)];
        for (int chain = 0; chain < grid.chains; ++chain) {
            const auto& cr = chain_rows[static_cast<std::size_t>(point * grid.chains + chain)];
            row.subject_ari += cr.subject_ari;
            row.subject_f1 += cr.subject_f1;
            row.condition_ari += cr.condition_ari;
            row.condition_f1 += cr.condition_f1;
        }
        const auto nc = static_cast<double>(grid.chains);
        row.subject_ari /= nc;
        row.subject_f1 /= nc;
        row.condition_ari /= nc;
        row.condition_f1 /= nc;
    }
    return table;
}

/// First grid value after which the score gain per step drops below
/// `threshold`; the last value when the curve keeps rising.
inline std::size_t plateau_pick_index(std::span<const double> scores, double threshold) {
    if (scores.empty()) throw std::invalid_argument("plateau_pick_index: empty scores");
    for (std::size_t i = 0; i + 1 < scores.size(); ++i) {
        if (scores[i + 1] - scores[i] < threshold) return i;
    }
    return scores.size() - 1;
}

struct HeuristicResult {
    double lambda = 0.0;
    double rho = 0.0;
    double tau = 0.0;
    double initial_rho = 0.0;
    SensitivityTable lambda_table, rho_table, tau_table;
};

/// Step-by-step selection of (lambda, rho, tau): start at tau = 0, pick a
/// provisional rho from its grid (a uniform draw unless `initial_rho` pins
/// it), sweep lambda and choose by the plateau rule on the condition scores,
/// re-sweep rho at the chosen lambda, then sweep tau at the chosen (lambda,
/// rho) and choose on the subject scores. The fixed fields of the supplied
/// grids are ignored; the procedure chains its own choices.
inline HeuristicResult heuristic_select(const DataMatrix& data, const Hyperparams& h, const GridSpec& lambda_grid,
                                        const GridSpec& rho_grid, const GridSpec& tau_grid, const SamplerConfig& cfg,
                                        Rng& rng, double plateau_threshold = 0.02,
                                        std::optional<double> initial_rho = std::nullopt) {
    lambda_grid.validate();
    rho_grid.validate();
    tau_grid.validate();
    if (lambda_grid.parameter != "lambda" || rho_grid.parameter != "rho" || tau_grid.parameter != "tau")
        throw std::invalid_argument("heuristic_select: grids must cover lambda, rho and tau");

    HeuristicResult result;
    result.initial_rho =
        initial_rho ? *initial_rho
                    : rho_grid.values[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(rho_grid.values.size())))];

    auto sweep = [&](const GridSpec& grid, double fixed_lambda, double fixed_rho, double fixed_tau,
                     std::uint64_t sweep_id) {
        GridSpec g = grid;
        g.fixed_lambda = fixed_lambda;
        g.fixed_rho = fixed_rho;
        g.fixed_tau = fixed_tau;
        SamplerConfig c = cfg;
        c.seed = Rng::derive_seed(cfg.seed, sweep_id);
        return grid_sensitivity(data, h, g, c);
    };
    auto pick = [&](const SensitivityTable& table, bool subject_level) {
        std::vector<double> scores;
        scores.reserve(table.size());
        for (const auto& row : table) scores.push_back(subject_level ? row.subject_ari : row.condition_ari);
        return table[plateau_pick_index(scores, plateau_threshold)].value;
    };

    result.lambda_table = sweep(lambda_grid, 0.0, result.initial_rho, 0.0, 1);
    result.lambda = pick(result.lambda_table, false);
    result.rho_table = sweep(rho_grid, result.lambda, 0.0, 0.0, 2);
    result.rho = pick(result.rho_table, false);
    result.tau_table = sweep(tau_grid, result.lambda, result.rho, 0.0, 3);
    result.tau = pick(result.tau_table, true);
    return result;
}

inline void write_sensitivity_csv(const SensitivityTable& table, const std::string& parameter,
                                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << parameter << ",subject_ari,subject_f1,condition_ari,condition_f1\n";
    char buf[200];
    for (const auto& row : table) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", row.value, row.subject_ari, row.subject_f1,
                      row.condition_ari, row.condition_f1);
        out << buf;
    }
}

} // namespace hsp
