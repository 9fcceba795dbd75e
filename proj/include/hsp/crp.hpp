#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "hsp/partition.hpp"

namespace hsp {

/// Closed-form log pmf of a Chinese restaurant process with mass `beta`:
/// log Gamma(beta) - log Gamma(n+beta) + S log beta + sum_s log Gamma(n_s).
inline double crp_log_pmf(const Partition& p, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("crp_log_pmf: beta must be positive");
    const int n = p.n_items();
    double lp = std::lgamma(beta) - std::lgamma(static_cast<double>(n) + beta) +
                static_cast<double>(p.num_clusters()) * std::log(beta);
    for (int sz : p.cluster_sizes()) lp += std::lgamma(static_cast<double>(sz));
    return lp;
}

/// CRP predictive at 1-based position t given the sizes of the clusters formed
/// so far. Returns one probability per existing cluster plus, last, the
/// new-cluster probability; the entries sum to 1.
inline std::vector<double> crp_predictive(std::span<const int> prefix_counts, int t, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("crp_predictive: beta must be positive");
    const long total = std::accumulate(prefix_counts.begin(), prefix_counts.end(), 0L);
    if (t < 1 || total != static_cast<long>(t) - 1)
        throw std::invalid_argument("crp_predictive: prefix counts must sum to t-1");
    std::vector<double> probs(prefix_counts.size() + 1);
    const double denom = beta + static_cast<double>(t) - 1.0;
    for (std::size_t s = 0; s < prefix_counts.size(); ++s)
        probs[s] = static_cast<double>(prefix_counts[s]) / denom;
    probs.back() = beta / denom;
    return probs;
}

} // namespace hsp
