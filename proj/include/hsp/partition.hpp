#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hsp/error.hpp"
#include "hsp/rng.hpp"

namespace hsp {

namespace detail {

/// Relabel an arbitrary label vector into first-appearance form (1, 2, ...).
inline std::vector<int> canonical_labels(std::span<const int> raw) {
    std::vector<int> out(raw.size());
    std::unordered_map<int, int> seen;
    seen.reserve(raw.size());
    int next = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto [it, inserted] = seen.emplace(raw[i], next + 1);
        if (inserted) ++next;
        out[i] = it->second;
    }
    return out;
}

} // namespace detail

/// A set partition of n items, stored as a cluster-label vector in canonical
/// (first-appearance) form: label 1 appears before any 2, 2 before any 3, etc.
/// Canonical form makes equality of set partitions plain vector equality.
class Partition {
public:
    Partition() = default;

    /// Build from arbitrary labels; relabels into canonical form.
    static Partition from_labels(std::span<const int> raw) {
        if (raw.empty()) throw std::invalid_argument("Partition: label vector must be non-empty");
        Partition p;
        p.labels_ = detail::canonical_labels(raw);
        int s = 0;
        for (int lab : p.labels_) s = std::max(s, lab);
        p.sizes_.assign(static_cast<std::size_t>(s), 0);
        for (int lab : p.labels_) ++p.sizes_[static_cast<std::size_t>(lab - 1)];
        return p;
    }

    /// All items in a single cluster.
    static Partition singletons_merged(int n) { return from_labels(std::vector<int>(static_cast<std::size_t>(n), 1)); }

    /// Every item its own cluster.
    static Partition all_singletons(int n) {
        std::vector<int> raw(static_cast<std::size_t>(n));
        std::iota(raw.begin(), raw.end(), 1);
        return from_labels(raw);
    }

    int n_items() const { return static_cast<int>(labels_.size()); }
    int num_clusters() const { return static_cast<int>(sizes_.size()); }
    int label(int item) const { return labels_[static_cast<std::size_t>(item)]; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<int>& cluster_sizes() const { return sizes_; }
    int cluster_size(int cluster_1based) const { return sizes_[static_cast<std::size_t>(cluster_1based - 1)]; }

    friend bool operator==(const Partition& a, const Partition& b) { return a.labels_ == b.labels_; }

private:
    std::vector<int> labels_; // canonical, 1-based
    std::vector<int> sizes_;  // sizes_[k] = size of cluster k+1
};

struct PartitionHash {
    std::size_t operator()(const Partition& p) const {
        std::size_t h = 0x9e3779b97f4a7c15ULL ^ p.labels().size();
        for (int lab : p.labels()) {
            h ^= static_cast<std::size_t>(lab) + 0x9e3779b9ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

/// Canonicalize a raw label vector. Idempotent; empty input is an error.
inline Partition canonicalize(std::span<const int> raw_labels) { return Partition::from_labels(raw_labels); }

inline Partition canonicalize(const std::vector<int>& raw_labels) {
    return Partition::from_labels(std::span<const int>(raw_labels));
}

/// A visit order over n items, stored 0-based: order[t] is the item visited at step t.
class Permutation {
public:
    Permutation() = default;

    static Permutation identity(int n) {
        if (n < 1) throw std::invalid_argument("Permutation: n must be >= 1");
        Permutation p;
        p.order_.resize(static_cast<std::size_t>(n));
        std::iota(p.order_.begin(), p.order_.end(), 0);
        return p;
    }

    static Permutation from_order(std::vector<int> order_0based) {
        if (order_0based.empty()) throw std::invalid_argument("Permutation: order must be non-empty");
        std::vector<char> seen(order_0based.size(), 0);
        for (int v : order_0based) {
            if (v < 0 || v >= static_cast<int>(order_0based.size()) || seen[static_cast<std::size_t>(v)])
                throw std::invalid_argument("Permutation: order is not a bijection");
            seen[static_cast<std::size_t>(v)] = 1;
        }
        Permutation p;
        p.order_ = std::move(order_0based);
        return p;
    }

    int size() const { return static_cast<int>(order_.size()); }
    int item_at(int step) const { return order_[static_cast<std::size_t>(step)]; }
    const std::vector<int>& order() const { return order_; }
    std::vector<int>& order() { return order_; }

    friend bool operator==(const Permutation& a, const Permutation& b) { return a.order_ == b.order_; }

private:
    std::vector<int> order_;
};

/// Uniform random permutation of n items; each of the n! orders equally likely.
inline Permutation uniform_permutation(int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("uniform_permutation: n must be >= 1");
    auto p = Permutation::identity(n);
    rng.shuffle(std::span<int>(p.order()));
    return p;
}

inline constexpr int kMaxEnumerationItems = 12; // Bell(12) ~ 4.2M

/// All set partitions of n items, in canonical form, via restricted growth
/// strings. Exhaustive oracle for pmf normalization tests; guarded at n <= 12.
inline std::vector<Partition> enumerate_partitions(int n) {
    if (n < 1) throw std::invalid_argument("enumerate_partitions: n must be >= 1");
    if (n > kMaxEnumerationItems)
        throw ResourceLimitError("enumerate_partitions: n > " + std::to_string(kMaxEnumerationItems));
    std::vector<Partition> out;
    std::vector<int> labels(static_cast<std::size_t>(n));
    auto rec = [&](auto&& self, int i, int max_label) -> void {
        if (i == n) {
            out.push_back(Partition::from_labels(labels));
            return;
        }
        // a restricted growth string is canonical by construction
        for (int lab = 1; lab <= max_label + 1; ++lab) {
            labels[static_cast<std::size_t>(i)] = lab;
            self(self, i + 1, std::max(max_label, lab));
        }
    };
    rec(rec, 0, 0);
    return out;
}

} // namespace hsp
