#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsp/data_matrix.hpp"
#include "hsp/error.hpp"
#include "hsp/metrics.hpp"
#include "hsp/model.hpp"
#include "hsp/partition.hpp"
#include "hsp/sampler.hpp"
#include "hsp/simulate.hpp"

namespace hsp {

/// 17 significant digits: enough for bit-faithful double round trips.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

/// RFC-4180 row reader; handles quoted fields (including embedded separators
/// and newlines). Returns false at end of stream.
inline bool read_csv_row(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int ch;
    while ((ch = in.get()) != EOF) {
        any = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_no;
                field += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            ++line_no;
            break;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

inline double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw DataError(path, line, "expected a number, got '" + s + "'");
    return v;
}

} // namespace detail

/// Write the condition-by-subject matrix: header row of subject identifiers,
/// one row per condition with its identifier first.
inline void write_data_csv(const DataMatrix& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "condition";
    for (const auto& name : data.subject_names) out << ',' << detail::csv_escape(name);
    out << '\n';
    for (int i = 0; i < data.n_conditions; ++i) {
        out << detail::csv_escape(data.condition_names[static_cast<std::size_t>(i)]);
        for (int j = 0; j < data.n_subjects; ++j) out << ',' << format_double(data(i, j));
        out << '\n';
    }
}

inline DataMatrix read_data_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::size_t line_no = 1;
    std::vector<std::string> header;
    if (!detail::read_csv_row(in, header, line_no) || header.size() < 2)
        throw DataError(path, 1, "missing header row with subject identifiers");
    const int J = static_cast<int>(header.size()) - 1;
    std::vector<std::string> row;
    std::vector<std::string> condition_names;
    std::vector<std::vector<double>> rows;
    while (true) {
        const std::size_t row_line = line_no;
        if (!detail::read_csv_row(in, row, line_no)) break;
        if (row.size() == 1 && row[0].empty()) continue; // trailing blank line
        if (static_cast<int>(row.size()) != J + 1)
            throw DataError(path, row_line,
                            "expected " + std::to_string(J + 1) + " fields, got " + std::to_string(row.size()));
        condition_names.push_back(row[0]);
        std::vector<double> values(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j)
            values[static_cast<std::size_t>(j)] = detail::parse_double(row[static_cast<std::size_t>(j) + 1], path, row_line);
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw DataError(path, line_no, "no data rows");
    DataMatrix data(static_cast<int>(rows.size()), J);
    data.condition_names = std::move(condition_names);
    data.subject_names.assign(header.begin() + 1, header.end());
    for (int i = 0; i < data.n_conditions; ++i)
        for (int j = 0; j < data.n_subjects; ++j) data(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return data;
}

inline std::string format_partition(const Partition& p) {
    std::string out;
    for (int i = 0; i < p.n_items(); ++i) {
        if (i) out += ',';
        out += std::to_string(p.label(i));
    }
    return out;
}

inline Partition parse_partition_labels(const std::string& text, const std::string& context) {
    std::vector<int> labels;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        char* end = nullptr;
        const long v = std::strtol(tok.c_str(), &end, 10);
        if (end == tok.c_str() || *end != '\0')
            throw DataError(context + ": bad partition label '" + tok + "'");
        labels.push_back(static_cast<int>(v));
    }
    if (labels.empty()) throw DataError(context + ": empty partition");
    return Partition::from_labels(labels);
}

/// One partition per line, comma-separated canonical labels.
inline void write_partition_file(std::span<const Partition> partitions, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (const auto& p : partitions) out << format_partition(p) << '\n';
}

inline std::vector<Partition> read_partition_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<Partition> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out.push_back(parse_partition_labels(line, path + ":" + std::to_string(line_no)));
    }
    if (out.empty()) throw DataError(path + ": no partitions");
    return out;
}

/// Trace file: a header line referencing the run metadata document, then one
/// line per kept iteration: `iter;c=<labels>;pi_1=<labels>;...` with base
/// partitions appended as `nu_k=` fields when they were recorded.
inline void write_trace(const PartitionTrace& trace, const std::string& path, const std::string& meta_ref,
                        std::int64_t burn_in, std::int64_t thin) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "#hsp-trace v1 meta=" << meta_ref << '\n';
    for (std::int64_t t = 0; t < trace.kept_count(); ++t) {
        const auto tu = static_cast<std::size_t>(t);
        out << burn_in + (t + 1) * thin << ";c=" << format_partition(trace.subject_partitions[tu]);
        for (std::size_t j = 0; j < trace.condition_partitions[tu].size(); ++j)
            out << ";pi_" << j + 1 << '=' << format_partition(trace.condition_partitions[tu][j]);
        if (!trace.base_partitions.empty())
            for (std::size_t k = 0; k < trace.base_partitions[tu].size(); ++k)
                out << ";nu_" << k + 1 << '=' << format_partition(trace.base_partitions[tu][k]);
        out << '\n';
    }
}

inline PartitionTrace read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    PartitionTrace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string field;
        std::optional<Partition> c;
        std::vector<Partition> pis, nus;
        bool first = true;
        while (std::getline(ss, field, ';')) {
            if (first) { // iteration counter
                first = false;
                continue;
            }
            const auto eq = field.find('=');
            if (eq == std::string::npos) throw DataError(path, line_no, "malformed trace field '" + field + "'");
            const std::string key = field.substr(0, eq);
            const std::string val = field.substr(eq + 1);
            const std::string ctx = path + ":" + std::to_string(line_no);
            if (key == "c") c = parse_partition_labels(val, ctx);
            else if (key.rfind("pi_", 0) == 0) pis.push_back(parse_partition_labels(val, ctx));
            else if (key.rfind("nu_", 0) == 0) nus.push_back(parse_partition_labels(val, ctx));
            else throw DataError(path, line_no, "unknown trace field '" + key + "'");
        }
        if (!c || pis.empty()) throw DataError(path, line_no, "trace line missing c or pi fields");
        trace.subject_partitions.push_back(std::move(*c));
        trace.condition_partitions.push_back(std::move(pis));
        if (!nus.empty()) trace.base_partitions.push_back(std::move(nus));
    }
    if (trace.subject_partitions.empty()) throw DataError(path + ": empty trace");
    return trace;
}

inline void write_coclustering_csv(const CoClusterMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "item";
    for (const auto& name : m.item_names) out << ',' << detail::csv_escape(name);
    out << '\n';
    for (int u = 0; u < m.n; ++u) {
        out << detail::csv_escape(m.item_names[static_cast<std::size_t>(u)]);
        for (int v = 0; v < m.n; ++v) out << ',' << format_double(m(u, v));
        out << '\n';
    }
}

/// Truth sidecar for generated datasets.
inline void write_dataset_sidecar(const SyntheticDataset& ds, const std::string& path) {
    nlohmann::json doc;
    doc["scenario"] = ds.scenario;
    doc["seed"] = ds.seed;
    doc["conditions"] = ds.data.n_conditions;
    doc["subjects"] = ds.data.n_subjects;
    if (ds.scenario == "sim1b") doc["contamination"] = ds.contamination;
    doc["true_subject_partition"] = ds.true_subject_partition.labels();
    auto& pis = doc["true_condition_partitions"] = nlohmann::json::array();
    for (const auto& p : ds.true_condition_partitions) pis.push_back(p.labels());
    if (ds.base_nu0) doc["base_nu0"] = ds.base_nu0->labels();
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
}

struct DatasetTruth {
    Partition subject_partition;
    std::vector<Partition> condition_partitions;
    std::optional<Partition> base_nu0;
};

inline DatasetTruth read_dataset_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    DatasetTruth truth;
    truth.subject_partition = Partition::from_labels(doc.at("true_subject_partition").get<std::vector<int>>());
    for (const auto& labels : doc.at("true_condition_partitions"))
        truth.condition_partitions.push_back(Partition::from_labels(labels.get<std::vector<int>>()));
    if (doc.contains("base_nu0")) truth.base_nu0 = Partition::from_labels(doc.at("base_nu0").get<std::vector<int>>());
    return truth;
}

/// A batch run description: a flat key = value file (one key per
/// hyperparameter / sampler field plus paths), `#` for comments.
struct RunConfig {
    std::string data_path;
    std::string out_dir = ".";
    std::string c0_path;
    std::string nu0_path;
    double tau = 0.0, rho = 0.0, lambda = 0.0;
    double alpha0 = 1.0, beta0 = 1.0, beta = 1.0;
    double d0 = 7.25, e0 = 1.0;
    std::optional<double> a0, b0; // default: per-subject sample mean / variance
    SamplerConfig sampler;

    /// Assemble hyperparameters for `data`, reading the base-partition files
    /// if configured (trivial one-cluster bases otherwise).
    Hyperparams make_hyperparams(const DataMatrix& data) const {
        Hyperparams h = Hyperparams::defaults_for(data);
        h.tau = tau;
        h.rho = rho;
        h.lambda = lambda;
        h.alpha0 = alpha0;
        h.beta0 = beta0;
        h.beta = beta;
        h.d0.assign(static_cast<std::size_t>(data.n_subjects), d0);
        h.e0.assign(static_cast<std::size_t>(data.n_subjects), e0);
        if (a0) h.a0.assign(static_cast<std::size_t>(data.n_subjects), *a0);
        if (b0) h.b0.assign(static_cast<std::size_t>(data.n_subjects), *b0);
        if (!c0_path.empty()) {
            h.c0 = read_partition_file(c0_path).front();
            if (h.c0.n_items() != data.n_subjects)
                throw DataError(c0_path + ": c0 has " + std::to_string(h.c0.n_items()) + " labels, expected " +
                                std::to_string(data.n_subjects));
        }
        if (!nu0_path.empty()) {
            h.nu0 = read_partition_file(nu0_path).front();
            if (h.nu0.n_items() != data.n_conditions)
                throw DataError(nu0_path + ": nu0 has " + std::to_string(h.nu0.n_items()) + " labels, expected " +
                                std::to_string(data.n_conditions));
        }
        return h;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v, const std::string& path, std::size_t line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DataError(path, line, "expected a boolean, got '" + v + "'");
}

} // namespace detail

inline RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path + "'");
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError(path, line_no, "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key == "data") cfg.data_path = val;
        else if (key == "out_dir") cfg.out_dir = val;
        else if (key == "c0") cfg.c0_path = val;
        else if (key == "nu0") cfg.nu0_path = val;
        else if (key == "tau") cfg.tau = detail::parse_double(val, path, line_no);
        else if (key == "rho") cfg.rho = detail::parse_double(val, path, line_no);
        else if (key == "lambda") cfg.lambda = detail::parse_double(val, path, line_no);
        else if (key == "alpha0") cfg.alpha0 = detail::parse_double(val, path, line_no);
        else if (key == "beta0") cfg.beta0 = detail::parse_double(val, path, line_no);
        else if (key == "beta") cfg.beta = detail::parse_double(val, path, line_no);
        else if (key == "d0") cfg.d0 = detail::parse_double(val, path, line_no);
        else if (key == "e0") cfg.e0 = detail::parse_double(val, path, line_no);
        else if (key == "a0") cfg.a0 = detail::parse_double(val, path, line_no);
        else if (key == "b0") cfg.b0 = detail::parse_double(val, path, line_no);
        else if (key == "iterations") cfg.sampler.iterations = static_cast<std::int64_t>(detail::parse_double(val, path, line_no));
        else if (key == "burn_in") cfg.sampler.burn_in = static_cast<std::int64_t>(detail::parse_double(val, path, line_no));
        else if (key == "thin") cfg.sampler.thin = static_cast<std::int64_t>(detail::parse_double(val, path, line_no));
        else if (key == "seed") cfg.sampler.seed = static_cast<std::uint64_t>(std::strtoull(val.c_str(), nullptr, 10));
        else if (key == "prior_only") cfg.sampler.prior_only = detail::parse_bool(val, path, line_no);
        else if (key == "record_nu_star") cfg.sampler.record_nu_star = detail::parse_bool(val, path, line_no);
        else if (key == "shuffle_size") cfg.sampler.shuffle_size = static_cast<int>(detail::parse_double(val, path, line_no));
        else throw DataError(path, line_no, "unknown config key '" + key + "'");
    }
    return cfg;
}

/// Run metadata document written next to every trace.
inline nlohmann::json run_metadata_json(const RunConfig& cfg, const Hyperparams& h, const ChainResult& result,
                                        int n_conditions, int n_subjects) {
    nlohmann::json doc;
    doc["seed"] = cfg.sampler.seed;
    doc["config"] = {{"iterations", cfg.sampler.iterations}, {"burn_in", cfg.sampler.burn_in},
                     {"thin", cfg.sampler.thin},             {"prior_only", cfg.sampler.prior_only},
                     {"record_nu_star", cfg.sampler.record_nu_star}, {"shuffle_size", cfg.sampler.shuffle_size}};
    doc["hyperparams"] = {{"tau", h.tau},       {"rho", h.rho},     {"lambda", h.lambda},
                          {"alpha0", h.alpha0}, {"beta0", h.beta0}, {"beta", h.beta},
                          {"a0", h.a0},         {"b0", h.b0},       {"d0", h.d0},
                          {"e0", h.e0},         {"c0", h.c0.labels()}, {"nu0", h.nu0.labels()}};
    doc["dimensions"] = {{"conditions", n_conditions}, {"subjects", n_subjects}};
    doc["kept_samples"] = result.trace.kept_count();
    doc["wall_seconds"] = result.wall_seconds;
    doc["acceptance_rates"] = {
        {"delta", AcceptanceStats::rate(result.acceptance.delta_accepted, result.acceptance.delta_proposed)},
        {"zeta", AcceptanceStats::rate(result.acceptance.zeta_accepted, result.acceptance.zeta_proposed)},
        {"eps", AcceptanceStats::rate(result.acceptance.eps_accepted, result.acceptance.eps_proposed)}};
    doc["notes"] = "per-group condition co-clustering matrices condition on the VI point estimate of the subject "
                   "partition and aggregate pi_j samples over the subjects of each estimated group";
    return doc;
}

} // namespace hsp
