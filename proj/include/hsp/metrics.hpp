#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hsp/partition.hpp"

namespace hsp {

namespace detail {

/// Contingency table of two equal-length partitions plus the marginal counts.
struct Contingency {
    std::vector<long> cells; // [a * q_clusters + b]
    std::vector<long> row_sums, col_sums;
    int p_clusters = 0, q_clusters = 0;
    long n = 0;
};

inline Contingency contingency_table(const Partition& p, const Partition& q) {
    if (p.n_items() != q.n_items()) throw std::invalid_argument("partition metrics: size mismatch");
    Contingency c;
    c.p_clusters = p.num_clusters();
    c.q_clusters = q.num_clusters();
    c.n = p.n_items();
    c.cells.assign(static_cast<std::size_t>(c.p_clusters) * static_cast<std::size_t>(c.q_clusters), 0);
    c.row_sums.assign(static_cast<std::size_t>(c.p_clusters), 0);
    c.col_sums.assign(static_cast<std::size_t>(c.q_clusters), 0);
    for (int i = 0; i < p.n_items(); ++i) {
        const auto a = static_cast<std::size_t>(p.label(i) - 1);
        const auto b = static_cast<std::size_t>(q.label(i) - 1);
        ++c.cells[a * static_cast<std::size_t>(c.q_clusters) + b];
        ++c.row_sums[a];
        ++c.col_sums[b];
    }
    return c;
}

inline double comb2(long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); }

} // namespace detail

/// Hubert-Arabie adjusted Rand index: (Index - Expected) / (Max - Expected)
/// over the pair-count contingency table. Identical partitions give 1; the
/// degenerate Max == Expected case (both partitions trivial) gives 0.
inline double adjusted_rand_index(const Partition& p, const Partition& q) {
    if (p == q) return 1.0;
    const auto c = detail::contingency_table(p, q);
    double index = 0.0;
    for (long cell : c.cells) index += detail::comb2(cell);
    double sum_p = 0.0, sum_q = 0.0;
    for (long r : c.row_sums) sum_p += detail::comb2(r);
    for (long s : c.col_sums) sum_q += detail::comb2(s);
    const double expected = sum_p * sum_q / detail::comb2(c.n);
    const double max_index = 0.5 * (sum_p + sum_q);
    if (std::abs(max_index - expected) < 1e-12) return 0.0;
    return (index - expected) / (max_index - expected);
}

/// Size-weighted best-match cluster F1, symmetrized by averaging both
/// directions: F(p->q) = (1/n) sum_a |a| max_b 2|a&b| / (|a|+|b|).
inline double symmetrized_f1(const Partition& p, const Partition& q) {
    const auto c = detail::contingency_table(p, q);
    auto directed = [&](bool p_to_q) {
        const int A = p_to_q ? c.p_clusters : c.q_clusters;
        const int B = p_to_q ? c.q_clusters : c.p_clusters;
        const auto& a_sums = p_to_q ? c.row_sums : c.col_sums;
        const auto& b_sums = p_to_q ? c.col_sums : c.row_sums;
        double acc = 0.0;
        for (int a = 0; a < A; ++a) {
            double best = 0.0;
            for (int b = 0; b < B; ++b) {
                const auto idx = p_to_q
                                     ? static_cast<std::size_t>(a) * static_cast<std::size_t>(c.q_clusters) + static_cast<std::size_t>(b)
                                     : static_cast<std::size_t>(b) * static_cast<std::size_t>(c.q_clusters) + static_cast<std::size_t>(a);
                const double inter = static_cast<double>(c.cells[idx]);
                if (inter <= 0.0) continue;
                best = std::max(best, 2.0 * inter /
                                          static_cast<double>(a_sums[static_cast<std::size_t>(a)] +
                                                              b_sums[static_cast<std::size_t>(b)]));
            }
            acc += static_cast<double>(a_sums[static_cast<std::size_t>(a)]) * best;
        }
        return acc / static_cast<double>(c.n);
    };
    return 0.5 * (directed(true) + directed(false));
}

/// Variation of information in nats: H(p) + H(q) - 2 I(p, q). A metric on
/// the space of set partitions.
inline double variation_of_information(const Partition& p, const Partition& q) {
    if (p.n_items() != q.n_items()) throw std::invalid_argument("partition metrics: size mismatch");
    if (p == q) return 0.0;
    const auto c = detail::contingency_table(p, q);
    const double n = static_cast<double>(c.n);
    double hp = 0.0, hq = 0.0, mi = 0.0;
    for (long r : c.row_sums)
        if (r > 0) hp -= static_cast<double>(r) / n * std::log(static_cast<double>(r) / n);
    for (long s : c.col_sums)
        if (s > 0) hq -= static_cast<double>(s) / n * std::log(static_cast<double>(s) / n);
    for (int a = 0; a < c.p_clusters; ++a) {
        for (int b = 0; b < c.q_clusters; ++b) {
            const long cell = c.cells[static_cast<std::size_t>(a) * static_cast<std::size_t>(c.q_clusters) + static_cast<std::size_t>(b)];
            if (cell == 0) continue;
            const double pab = static_cast<double>(cell) / n;
            const double pa = static_cast<double>(c.row_sums[static_cast<std::size_t>(a)]) / n;
            const double pb = static_cast<double>(c.col_sums[static_cast<std::size_t>(b)]) / n;
            mi += pab * std::log(pab / (pa * pb));
        }
    }
    const double vi = hp + hq - 2.0 * mi;
    return vi < 0.0 ? 0.0 : vi; // clamp tiny negative rounding
}

/// Posterior co-clustering probabilities: entry (u, v) is the fraction of
/// partitions in which items u and v share a cluster.
struct CoClusterMatrix {
    int n = 0;
    std::vector<double> probs; // row-major n x n, symmetric, unit diagonal
    std::vector<std::string> item_names;

    double operator()(int u, int v) const {
        return probs[static_cast<std::size_t>(u) * static_cast<std::size_t>(n) + static_cast<std::size_t>(v)];
    }
};

inline CoClusterMatrix coclustering_matrix(std::span<const Partition> partitions) {
    if (partitions.empty()) throw std::invalid_argument("coclustering_matrix: empty partition sequence");
    const int n = partitions.front().n_items();
    for (const auto& p : partitions)
        if (p.n_items() != n) throw std::invalid_argument("coclustering_matrix: partitions differ in size");
    CoClusterMatrix m;
    m.n = n;
    m.probs.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (const auto& p : partitions) {
        for (int u = 0; u < n; ++u) {
            for (int v = u + 1; v < n; ++v) {
                if (p.label(u) == p.label(v)) {
                    m.probs[static_cast<std::size_t>(u) * static_cast<std::size_t>(n) + static_cast<std::size_t>(v)] += 1.0;
                }
            }
        }
    }
    const double total = static_cast<double>(partitions.size());
    for (int u = 0; u < n; ++u) {
        m.probs[static_cast<std::size_t>(u) * static_cast<std::size_t>(n) + static_cast<std::size_t>(u)] = 1.0;
        for (int v = u + 1; v < n; ++v) {
            const auto uv = static_cast<std::size_t>(u) * static_cast<std::size_t>(n) + static_cast<std::size_t>(v);
            const auto vu = static_cast<std::size_t>(v) * static_cast<std::size_t>(n) + static_cast<std::size_t>(u);
            m.probs[uv] /= total;
            m.probs[vu] = m.probs[uv];
        }
    }
    m.item_names.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) m.item_names.push_back("item" + std::to_string(i + 1));
    return m;
}

/// The sampled partition minimizing the average variation of information to
/// the whole sample; ties break toward the earliest first occurrence.
inline Partition vi_point_estimate(std::span<const Partition> partitions) {
    if (partitions.empty()) throw std::invalid_argument("vi_point_estimate: empty partition sequence");
    // dedupe, keeping first-occurrence order
    std::vector<Partition> distinct;
    std::vector<double> weight;
    std::unordered_map<Partition, std::size_t, PartitionHash> index;
    for (const auto& p : partitions) {
        auto [it, inserted] = index.emplace(p, distinct.size());
        if (inserted) {
            distinct.push_back(p);
            weight.push_back(0.0);
        }
        weight[it->second] += 1.0;
    }
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t a = 0; a < distinct.size(); ++a) {
        double score = 0.0;
        for (std::size_t b = 0; b < distinct.size(); ++b) {
            if (a == b) continue;
            score += weight[b] * variation_of_information(distinct[a], distinct[b]);
        }
        if (a == 0 || score < best_score) {
            best = a;
            best_score = score;
        }
    }
    return distinct[best];
}

} // namespace hsp
