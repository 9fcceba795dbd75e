#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "hsp/crp.hpp"
#include "hsp/partition.hpp"
#include "hsp/rng.hpp"

namespace hsp {

/// Parameters of a shrinkage partition (SP) distribution: a CRP baseline
/// tilted toward a base partition. `shrinkage[t]` is the tilt strength used
/// at allocation step t+1; a scalar broadcasts to all steps.
struct SpParams {
    Partition base;
    std::vector<double> shrinkage;
    Permutation perm;
    double baseline_mass = 1.0;

    SpParams(Partition base_partition, double scalar_shrinkage, Permutation visit_order, double mass)
        : base(std::move(base_partition)), perm(std::move(visit_order)), baseline_mass(mass) {
        shrinkage.assign(static_cast<std::size_t>(perm.size()), scalar_shrinkage);
        validate();
    }

    SpParams(Partition base_partition, std::vector<double> shrinkage_per_step, Permutation visit_order, double mass)
        : base(std::move(base_partition)),
          shrinkage(std::move(shrinkage_per_step)),
          perm(std::move(visit_order)),
          baseline_mass(mass) {
        validate();
    }

    void validate() const {
        const auto n = static_cast<std::size_t>(base.n_items());
        if (shrinkage.size() != n || static_cast<std::size_t>(perm.size()) != n)
            throw std::invalid_argument("SpParams: base, shrinkage and permutation sizes must match");
        if (baseline_mass <= 0.0) throw std::invalid_argument("SpParams: baseline mass must be positive");
        for (double s : shrinkage)
            if (s < 0.0 || !std::isfinite(s)) throw std::invalid_argument("SpParams: shrinkage must be non-negative");
    }
};

namespace detail {

struct SpWalkCheckpoint {
    int t = 0;
    int num_clusters = 0;
    double log_acc = 0.0;
    double prob_product = 1.0;
    std::vector<int> cluster_size;
    std::vector<int> base_seen;
    std::vector<int> match_count;
    std::vector<int> cluster_of_label;
};

/// Lookup table of exp(lambda * m / d) for a constant shrinkage, indexed as
/// [d * (n + 1) + m] with 1 <= d <= n and 0 <= m <= d. Saves the exp calls in
/// the walk's inner loop.
class SpExpTable {
public:
    void build(double lambda, int n) {
        stride_ = n + 1;
        values_.assign(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(stride_), 1.0);
        for (int d = 1; d <= n; ++d)
            for (int m = 0; m <= d; ++m)
                values_[static_cast<std::size_t>(d) * static_cast<std::size_t>(stride_) + static_cast<std::size_t>(m)] =
                    std::exp(lambda * static_cast<double>(m) / static_cast<double>(d));
    }
    const double* data() const { return values_.empty() ? nullptr : values_.data(); }
    int stride() const { return stride_; }

private:
    std::vector<double> values_;
    int stride_ = 0;
};

/// Incremental sequential-allocation walk for the SP distribution.
///
/// The walk visits items along a fixed order; at each step it forms the
/// unnormalized allocation weights
///   existing cluster s:  n_s * exp(lambda_t * matched/denom)
///   new cluster:         mass * exp(lambda_t * [denom == 0])
/// where `matched` counts earlier items of cluster s sharing the current
/// item's base label and `denom` counts all earlier items sharing it.
/// Weights are kept in linear space unless the shrinkage is large enough to
/// overflow exp, in which case a max-shifted log-space path is used.
///
/// Base and shrinkage are read through pointers at every step, so a caller
/// may mutate the bound base-label buffer between resets (candidate scans in
/// the Gibbs sweeps rely on this). Not thread-safe; use one walk per thread.
class SpWalk {
public:
    /// Bind fixed inputs; base labels and shrinkage are read through the
    /// pointers at every step. Call set_bounds() before walking. A caller
    /// whose shrinkage vector is constant may pass a matching SpExpTable to
    /// avoid the inner-loop exp calls.
    void bind(const int* base_labels, const double* shrinkage, const int* order, int n, double mass,
              const SpExpTable* exp_table = nullptr) {
        base_ = base_labels;
        shrink_ = shrinkage;
        order_ = order;
        n_ = n;
        mass_ = mass;
        log_mass_ = std::log(mass);
        double max_shrink = 0.0;
        for (int t = 0; t < n; ++t) max_shrink = std::max(max_shrink, shrinkage[t]);
        log_space_ = max_shrink > 600.0; // exp(lambda) must stay finite on the linear path
        table_ = nullptr;
        table_stride_ = 0;
        if (!log_space_) {
            exp_shrink_.resize(static_cast<std::size_t>(n));
            for (int t = 0; t < n; ++t) exp_shrink_[static_cast<std::size_t>(t)] = std::exp(shrinkage[t]);
            if (exp_table && exp_table->data()) {
                table_ = exp_table->data();
                table_stride_ = exp_table->stride();
            }
        }
    }

    /// Size the count tables for the raw label values that will be seen in
    /// target (`max_label`) and base (`max_base_label`) vectors; zeroes state.
    /// Keeping the bounds tight keeps checkpoint copies cheap.
    void set_bounds(int max_label, int max_base_label) {
        base_stride_ = max_base_label + 1;
        cluster_size_.assign(static_cast<std::size_t>(max_label) + 1, 0);
        base_seen_.assign(static_cast<std::size_t>(base_stride_), 0);
        match_count_.assign((static_cast<std::size_t>(max_label) + 1) * static_cast<std::size_t>(base_stride_), 0);
        cluster_of_label_.assign(static_cast<std::size_t>(max_label) + 2, -1);
        weights_.resize(static_cast<std::size_t>(max_label) + 2);
        t_ = 0;
        num_clusters_ = 0;
        log_acc_ = 0.0;
        prob_product_ = 1.0;
    }

    void reset() {
        std::fill(cluster_size_.begin(), cluster_size_.end(), 0);
        std::fill(base_seen_.begin(), base_seen_.end(), 0);
        std::fill(match_count_.begin(), match_count_.end(), 0);
        std::fill(cluster_of_label_.begin(), cluster_of_label_.end(), -1);
        t_ = 0;
        num_clusters_ = 0;
        log_acc_ = 0.0;
        prob_product_ = 1.0;
    }

    int step() const { return t_; }
    int num_clusters() const { return num_clusters_; }
    int current_item() const { return order_[t_]; }
    bool done() const { return t_ >= n_; }

    /// Allocation probabilities for the current step: one entry per occupied
    /// cluster (in first-appearance order of the walked prefix), then the
    /// new-cluster probability. Does not advance.
    void current_probs(std::vector<double>& out) {
        const int S = num_clusters_;
        compute_weights();
        out.resize(static_cast<std::size_t>(S) + 1);
        if (log_space_) {
            double m = weights_[0];
            for (int s = 1; s <= S; ++s) m = std::max(m, weights_[static_cast<std::size_t>(s)]);
            double total = 0.0;
            for (int s = 0; s <= S; ++s) total += std::exp(weights_[static_cast<std::size_t>(s)] - m);
            for (int s = 0; s <= S; ++s) out[static_cast<std::size_t>(s)] = std::exp(weights_[static_cast<std::size_t>(s)] - m) / total;
        } else {
            double total = 0.0;
            for (int s = 0; s <= S; ++s) total += weights_[static_cast<std::size_t>(s)];
            for (int s = 0; s <= S; ++s) out[static_cast<std::size_t>(s)] = weights_[static_cast<std::size_t>(s)] / total;
        }
    }

    /// Advance by assigning the current item the cluster carrying `raw_label`
    /// without computing the choice probability (prefix fast path for
    /// candidate scans: the shared prefix factor cancels in the softmax).
    void advance_forced(int raw_label) {
        int cluster = cluster_of_label_[static_cast<std::size_t>(raw_label)];
        if (cluster < 0) {
            cluster = num_clusters_;
            cluster_of_label_[static_cast<std::size_t>(raw_label)] = cluster;
        }
        place(cluster);
    }

    /// Advance by assigning the current item the cluster carrying `raw_label`
    /// in the target labeling, accumulating the choice probability into the
    /// running log probability (read it back with log_prob()).
    void advance_observed(int raw_label) {
        int cluster = cluster_of_label_[static_cast<std::size_t>(raw_label)];
        const bool is_new = cluster < 0;
        const int choice = is_new ? num_clusters_ : cluster;
        if (log_space_) {
            compute_weights();
            accumulate_choice_log(choice);
        } else {
            advance_linear_fused(choice);
        }
        if (is_new) cluster_of_label_[static_cast<std::size_t>(raw_label)] = choice;
        place(choice);
    }

    /// Log probability accumulated by advance_observed since the last reset,
    /// set_bounds or restore.
    double log_prob() const { return log_acc_ + std::log(prob_product_); }

    /// Advance by sampling a cluster for the current item; returns the
    /// 0-based cluster index (== previous cluster count when a new cluster
    /// was opened).
    int advance_sampled(Rng& rng) {
        const int S = num_clusters_;
        compute_weights();
        int choice;
        if (log_space_) {
            choice = rng.sample_log_weights(std::span<const double>(weights_.data(), static_cast<std::size_t>(S) + 1));
        } else {
            double total = 0.0;
            for (int s = 0; s <= S; ++s) total += weights_[static_cast<std::size_t>(s)];
            double u = rng.uniform() * total;
            choice = S;
            for (int s = 0; s < S; ++s) {
                u -= weights_[static_cast<std::size_t>(s)];
                if (u < 0.0) {
                    choice = s;
                    break;
                }
            }
        }
        place(choice);
        return choice;
    }

    void save(SpWalkCheckpoint& ck) const {
        ck.t = t_;
        ck.num_clusters = num_clusters_;
        ck.log_acc = log_acc_;
        ck.prob_product = prob_product_;
        ck.cluster_size = cluster_size_;
        ck.base_seen = base_seen_;
        ck.match_count = match_count_;
        ck.cluster_of_label = cluster_of_label_;
    }

    void restore(const SpWalkCheckpoint& ck) {
        t_ = ck.t;
        num_clusters_ = ck.num_clusters;
        log_acc_ = ck.log_acc;
        prob_product_ = ck.prob_product;
        cluster_size_ = ck.cluster_size;
        base_seen_ = ck.base_seen;
        match_count_ = ck.match_count;
        cluster_of_label_ = ck.cluster_of_label;
    }

private:
    void compute_weights() {
        const int item = order_[t_];
        const int b = base_[item];
        const int d = base_seen_[static_cast<std::size_t>(b)];
        const double lam = shrink_[t_];
        const int S = num_clusters_;
        if (log_space_) {
            if (d == 0) {
                for (int s = 0; s < S; ++s)
                    weights_[static_cast<std::size_t>(s)] = std::log(static_cast<double>(cluster_size_[static_cast<std::size_t>(s)]));
                weights_[static_cast<std::size_t>(S)] = log_mass_ + lam;
            } else {
                const double lam_over_d = lam / static_cast<double>(d);
                const int* mc = match_count_.data() + b;
                for (int s = 0; s < S; ++s) {
                    const int m = mc[static_cast<std::size_t>(s) * static_cast<std::size_t>(base_stride_)];
                    weights_[static_cast<std::size_t>(s)] =
                        std::log(static_cast<double>(cluster_size_[static_cast<std::size_t>(s)])) +
                        lam_over_d * static_cast<double>(m);
                }
                weights_[static_cast<std::size_t>(S)] = log_mass_;
            }
        } else {
            if (d == 0) {
                for (int s = 0; s < S; ++s)
                    weights_[static_cast<std::size_t>(s)] = static_cast<double>(cluster_size_[static_cast<std::size_t>(s)]);
                weights_[static_cast<std::size_t>(S)] = mass_ * exp_shrink_[static_cast<std::size_t>(t_)];
            } else {
                const int* mc = match_count_.data() + b;
                const double* tilt_row =
                    table_ ? table_ + static_cast<std::size_t>(d) * static_cast<std::size_t>(table_stride_) : nullptr;
                const double lam_over_d = lam / static_cast<double>(d);
                for (int s = 0; s < S; ++s) {
                    const double size = static_cast<double>(cluster_size_[static_cast<std::size_t>(s)]);
                    const int m = mc[static_cast<std::size_t>(s) * static_cast<std::size_t>(base_stride_)];
                    if (m == 0) {
                        weights_[static_cast<std::size_t>(s)] = size;
                    } else {
                        weights_[static_cast<std::size_t>(s)] =
                            size * (tilt_row ? tilt_row[static_cast<std::size_t>(m)]
                                             : std::exp(lam_over_d * static_cast<double>(m)));
                    }
                }
                weights_[static_cast<std::size_t>(S)] = mass_;
            }
        }
    }

    void accumulate_choice_log(int choice) {
        const int S = num_clusters_;
        double m = weights_[0];
        for (int s = 1; s <= S; ++s) m = std::max(m, weights_[static_cast<std::size_t>(s)]);
        double total = 0.0;
        for (int s = 0; s <= S; ++s) total += std::exp(weights_[static_cast<std::size_t>(s)] - m);
        log_acc_ += weights_[static_cast<std::size_t>(choice)] - m - std::log(total);
    }

    /// Single fused pass for the linear path: accumulate the total while
    /// computing the weights, and fold the chosen ratio into the product.
    void advance_linear_fused(int choice) {
        const int item = order_[t_];
        const int b = base_[item];
        const int d = base_seen_[static_cast<std::size_t>(b)];
        const int S = num_clusters_;
        double total;
        double w_choice;
        if (d == 0) {
            total = static_cast<double>(t_) + mass_ * exp_shrink_[static_cast<std::size_t>(t_)];
            w_choice = choice == S ? mass_ * exp_shrink_[static_cast<std::size_t>(t_)]
                                   : static_cast<double>(cluster_size_[static_cast<std::size_t>(choice)]);
        } else {
            const int* mc = match_count_.data() + b;
            total = mass_;
            w_choice = mass_;
            if (table_) {
                const double* tilt_row = table_ + static_cast<std::size_t>(d) * static_cast<std::size_t>(table_stride_);
                for (int s = 0; s < S; ++s) {
                    const int m = mc[static_cast<std::size_t>(s) * static_cast<std::size_t>(base_stride_)];
                    const double w = m == 0 ? static_cast<double>(cluster_size_[static_cast<std::size_t>(s)])
                                            : static_cast<double>(cluster_size_[static_cast<std::size_t>(s)]) *
                                                  tilt_row[static_cast<std::size_t>(m)];
                    total += w;
                    if (s == choice) w_choice = w;
                }
            } else {
                const double lam_over_d = shrink_[t_] / static_cast<double>(d);
                for (int s = 0; s < S; ++s) {
                    const int m = mc[static_cast<std::size_t>(s) * static_cast<std::size_t>(base_stride_)];
                    const double w = m == 0 ? static_cast<double>(cluster_size_[static_cast<std::size_t>(s)])
                                            : static_cast<double>(cluster_size_[static_cast<std::size_t>(s)]) *
                                                  std::exp(lam_over_d * static_cast<double>(m));
                    total += w;
                    if (s == choice) w_choice = w;
                }
            }
        }
        prob_product_ *= w_choice / total;
        if (prob_product_ < 1e-280) { // flush before the product underflows
            log_acc_ += std::log(prob_product_);
            prob_product_ = 1.0;
        }
    }

    void place(int cluster) {
        const int item = order_[t_];
        const int b = base_[item];
        if (cluster == num_clusters_) {
            ++num_clusters_;
        }
        ++cluster_size_[static_cast<std::size_t>(cluster)];
        ++match_count_[static_cast<std::size_t>(cluster) * static_cast<std::size_t>(base_stride_) + static_cast<std::size_t>(b)];
        ++base_seen_[static_cast<std::size_t>(b)];
        ++t_;
    }

    const int* base_ = nullptr;
    const double* shrink_ = nullptr;
    const int* order_ = nullptr;
    const double* table_ = nullptr;
    int table_stride_ = 0;
    int n_ = 0;
    double mass_ = 1.0;
    double log_mass_ = 0.0;
    int base_stride_ = 1;
    bool log_space_ = false;
    int t_ = 0;
    int num_clusters_ = 0;
    double log_acc_ = 0.0;
    double prob_product_ = 1.0;
    std::vector<double> exp_shrink_;
    std::vector<int> cluster_size_;
    std::vector<int> base_seen_;
    std::vector<int> match_count_; // [cluster * base_stride_ + base_label]
    std::vector<int> cluster_of_label_;
    std::vector<double> weights_;
};

/// Log pmf of `labels` (any positive labeling, not necessarily canonical)
/// under the SP walk with the given raw inputs. `walk` provides reusable
/// scratch; it is rebound on every call.
inline double sp_log_pmf_raw(std::span<const int> labels, std::span<const int> base_labels,
                             std::span<const double> shrinkage, std::span<const int> order, double mass,
                             SpWalk& walk, const SpExpTable* exp_table = nullptr) {
    int max_label = 0, max_base = 0;
    for (int v : labels) max_label = std::max(max_label, v);
    for (int v : base_labels) max_base = std::max(max_base, v);
    walk.bind(base_labels.data(), shrinkage.data(), order.data(), static_cast<int>(labels.size()), mass, exp_table);
    walk.set_bounds(max_label, max_base);
    while (!walk.done()) walk.advance_observed(labels[static_cast<std::size_t>(walk.current_item())]);
    return walk.log_prob();
}

} // namespace detail

/// Allocation probabilities for the item visited at step `t` (1-based), given
/// the cluster labels already assigned to the first t-1 visited items (in
/// visit order). Returns one probability per occupied prefix cluster, in
/// first-appearance order, plus the new-cluster probability last.
inline std::vector<double> sp_allocation_probs(std::span<const int> prefix_labels, const SpParams& params, int t) {
    params.validate();
    const int n = params.base.n_items();
    if (t < 1 || t > n) throw std::invalid_argument("sp_allocation_probs: step out of range");
    if (static_cast<int>(prefix_labels.size()) != t - 1)
        throw std::invalid_argument("sp_allocation_probs: prefix must have t-1 labels");
    detail::SpWalk walk;
    int max_label = 1;
    for (int v : prefix_labels) max_label = std::max(max_label, v);
    walk.bind(params.base.labels().data(), params.shrinkage.data(), params.perm.order().data(), n,
              params.baseline_mass);
    walk.set_bounds(max_label, params.base.num_clusters());
    for (int k = 0; k < t - 1; ++k) walk.advance_observed(prefix_labels[static_cast<std::size_t>(k)]);
    std::vector<double> probs;
    walk.current_probs(probs);
    return probs;
}

/// Log pmf of partition `p` under the SP distribution: the product of the
/// sequential allocation probabilities taken along the visit order.
inline double sp_log_pmf(const Partition& p, const SpParams& params) {
    params.validate();
    if (p.n_items() != params.base.n_items()) throw std::invalid_argument("sp_log_pmf: size mismatch");
    detail::SpWalk walk;
    return detail::sp_log_pmf_raw(p.labels(), params.base.labels(), params.shrinkage, params.perm.order(),
                                  params.baseline_mass, walk);
}

/// Forward draw from the SP distribution. The returned partition is canonical.
inline Partition sp_sample(const SpParams& params, Rng& rng) {
    params.validate();
    const int n = params.base.n_items();
    detail::SpWalk walk;
    walk.bind(params.base.labels().data(), params.shrinkage.data(), params.perm.order().data(), n,
              params.baseline_mass);
    walk.set_bounds(n, params.base.num_clusters());
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (int t = 0; t < n; ++t) {
        const int item = walk.current_item();
        labels[static_cast<std::size_t>(item)] = walk.advance_sampled(rng) + 1;
    }
    return Partition::from_labels(labels);
}

} // namespace hsp
