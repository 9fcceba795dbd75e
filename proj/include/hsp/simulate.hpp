#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsp/data_matrix.hpp"
#include "hsp/partition.hpp"
#include "hsp/rng.hpp"

namespace hsp {

/// A generated dataset with its ground truth attached.
struct SyntheticDataset {
    DataMatrix data;
    Partition true_subject_partition;
    std::vector<Partition> true_condition_partitions; // one per subject
    std::string scenario;
    double contamination = 0.0;
    std::optional<Partition> base_nu0; // fixture attached by some scenarios
    std::uint64_t seed = 0;
};

namespace detail {

inline constexpr std::array<double, 3> kClusterMeans = {-0.97, 0.15, 1.37};
inline constexpr double kNoiseVariance = 0.16;

/// The three within-group condition label templates over 30 conditions
/// (blocks of five).
inline std::vector<int> group_template(int group) {
    static constexpr std::array<std::array<int, 6>, 3> blocks = {{
        {1, 1, 2, 2, 3, 3},
        {1, 2, 3, 1, 3, 2},
        {1, 2, 1, 3, 2, 3},
    }};
    std::vector<int> labels;
    labels.reserve(30);
    for (int b = 0; b < 6; ++b)
        for (int r = 0; r < 5; ++r) labels.push_back(blocks[static_cast<std::size_t>(group)][static_cast<std::size_t>(b)]);
    return labels;
}

/// Uniformly permuted copy of the cluster means; one draw per subject.
inline std::array<double, 3> permuted_means(Rng& rng) {
    std::array<double, 3> means = kClusterMeans;
    rng.shuffle(std::span<double>(means));
    return means;
}

/// Redraw `count` distinct positions uniformly from {1,2,3}; labels stay in
/// the raw template label space.
inline void contaminate_raw(std::vector<int>& labels, int count, Rng& rng) {
    const int n = static_cast<int>(labels.size());
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < count; ++i) {
        const auto r = static_cast<std::size_t>(i + rng.uniform_int(n - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[r]);
    }
    for (int i = 0; i < count; ++i)
        labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1 + static_cast<int>(rng.uniform_int(3));
}

/// Shared generator core: three equal subject groups with per-group condition
/// templates, per-subject uniformly permuted cluster means, Normal noise.
inline SyntheticDataset three_group_dataset(int subjects_per_group, double contamination, Rng& rng) {
    const int I = 30;
    const int J = 3 * subjects_per_group;
    SyntheticDataset out;
    out.data = DataMatrix(I, J);
    out.contamination = contamination;

    std::vector<int> subject_groups(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) subject_groups[static_cast<std::size_t>(j)] = j / subjects_per_group + 1;
    out.true_subject_partition = Partition::from_labels(subject_groups);

    const double noise_sd = std::sqrt(kNoiseVariance);
    for (int j = 0; j < J; ++j) {
        std::vector<int> labels = group_template(subject_groups[static_cast<std::size_t>(j)] - 1);
        if (contamination > 0.0)
            contaminate_raw(labels, static_cast<int>(std::lround(contamination * I)), rng);
        const auto means = permuted_means(rng);
        for (int i = 0; i < I; ++i) {
            const double mu = means[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)];
            out.data(i, j) = rng.normal(mu, noise_sd);
        }
        out.true_condition_partitions.push_back(Partition::from_labels(labels));
    }
    return out;
}

} // namespace detail

/// 60 subjects in three equal groups over 30 conditions; cluster means are a
/// per-subject uniform permutation of (-0.97, 0.15, 1.37), noise variance 0.16.
inline SyntheticDataset generate_sim1a(Rng& rng) {
    auto out = detail::three_group_dataset(20, 0.0, rng);
    out.scenario = "sim1a";
    return out;
}

/// Sim 1(a) with each subject's condition labels contaminated: round(level*I)
/// positions redrawn uniformly from {1,2,3}.
inline SyntheticDataset generate_sim1b(double level, Rng& rng) {
    if (level < 0.0 || level > 1.0) throw std::invalid_argument("generate_sim1b: level must lie in [0,1]");
    auto out = detail::three_group_dataset(20, level, rng);
    out.scenario = "sim1b";
    return out;
}

/// Replace round(level * n) label positions, selected without replacement,
/// with uniform draws from {1,2,3} (a redraw may repeat the old label).
inline Partition contaminate(const Partition& labels, double level, Rng& rng) {
    if (level < 0.0 || level > 1.0) throw std::invalid_argument("contaminate: level must lie in [0,1]");
    std::vector<int> raw = labels.labels();
    detail::contaminate_raw(raw, static_cast<int>(std::lround(level * labels.n_items())), rng);
    return Partition::from_labels(raw);
}

/// Same data-generating process as Sim 1(a), with the six-block base
/// condition partition attached as scenario metadata.
inline SyntheticDataset generate_sim2(Rng& rng) {
    auto out = detail::three_group_dataset(20, 0.0, rng);
    out.scenario = "sim2";
    std::vector<int> nu0;
    for (int b = 1; b <= 6; ++b)
        for (int r = 0; r < 5; ++r) nu0.push_back(b);
    out.base_nu0 = Partition::from_labels(nu0);
    return out;
}

/// 180 subjects in three equal groups; otherwise as Sim 1(a).
inline SyntheticDataset generate_large(Rng& rng) {
    auto out = detail::three_group_dataset(60, 0.0, rng);
    out.scenario = "large";
    return out;
}

/// 10 subjects sharing one nested condition partition {1x10, 2x10, 3x10};
/// cluster means fixed at (-0.97, 0.15, 1.37) for every subject.
inline SyntheticDataset generate_shared_nested(Rng& rng) {
    const int I = 30, J = 10;
    SyntheticDataset out;
    out.scenario = "shared";
    out.data = DataMatrix(I, J);
    out.true_subject_partition = Partition::singletons_merged(J);
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(I));
    for (int b = 1; b <= 3; ++b)
        for (int r = 0; r < 10; ++r) labels.push_back(b);
    const Partition shared = Partition::from_labels(labels);
    const double noise_sd = std::sqrt(detail::kNoiseVariance);
    for (int j = 0; j < J; ++j) {
        out.true_condition_partitions.push_back(shared);
        for (int i = 0; i < I; ++i) {
            const double mu = detail::kClusterMeans[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)];
            out.data(i, j) = rng.normal(mu, noise_sd);
        }
    }
    return out;
}

/// Scenario dispatch by tag: sim1a, sim1b:<level>, sim2, large, shared.
inline SyntheticDataset generate_scenario(const std::string& tag, Rng& rng) {
    if (tag == "sim1a") return generate_sim1a(rng);
    if (tag == "sim2") return generate_sim2(rng);
    if (tag == "large") return generate_large(rng);
    if (tag == "shared") return generate_shared_nested(rng);
    if (tag.rfind("sim1b:", 0) == 0) {
        const double level = std::stod(tag.substr(6));
        return generate_sim1b(level, rng);
    }
    throw std::invalid_argument("unknown scenario '" + tag + "'");
}

} // namespace hsp
