#pragma once

#include <cmath>
#include <vector>

#include "hsp/data_matrix.hpp"
#include "hsp/error.hpp"
#include "hsp/partition.hpp"
#include "hsp/rng.hpp"

namespace hsp {

/// Hyperparameters of the hierarchical shrinkage partition model.
///
/// tau / rho / lambda are the shrinkage strengths of the three SP layers
/// (subjects toward c0, group base partitions toward nu0, per-subject
/// condition partitions toward their group base). alpha0 / beta0 / beta are
/// the corresponding CRP baseline masses. The Normal/Inverse-Gamma prior on
/// cluster parameters is per subject: mu ~ N(a0[j], b0[j]),
/// sigma2 ~ InvGamma(d0[j], e0[j]) with mean e0/(d0-1).
struct Hyperparams {
    double tau = 0.0;
    double rho = 0.0;
    double lambda = 0.0;
    double alpha0 = 1.0;
    double beta0 = 1.0;
    double beta = 1.0;
    std::vector<double> a0;
    std::vector<double> b0;
    std::vector<double> d0;
    std::vector<double> e0;
    Partition c0;
    Partition nu0;

    void validate(int n_conditions, int n_subjects) const {
        const auto J = static_cast<std::size_t>(n_subjects);
        if (tau < 0.0 || rho < 0.0 || lambda < 0.0)
            throw std::invalid_argument("Hyperparams: shrinkage parameters must be non-negative");
        if (alpha0 <= 0.0 || beta0 <= 0.0 || beta <= 0.0)
            throw std::invalid_argument("Hyperparams: CRP masses must be positive");
        if (a0.size() != J || b0.size() != J || d0.size() != J || e0.size() != J)
            throw std::invalid_argument("Hyperparams: per-subject prior vectors must have length J");
        for (double v : b0)
            if (v <= 0.0) throw std::invalid_argument("Hyperparams: b0 entries must be positive");
        for (double v : d0)
            if (v <= 1.0) throw std::invalid_argument("Hyperparams: d0 entries must exceed 1");
        for (double v : e0)
            if (v <= 0.0) throw std::invalid_argument("Hyperparams: e0 entries must be positive");
        if (c0.n_items() != n_subjects) throw std::invalid_argument("Hyperparams: c0 must partition the subjects");
        if (nu0.n_items() != n_conditions) throw std::invalid_argument("Hyperparams: nu0 must partition the conditions");
    }

    /// Defaults matching the usual fitting protocol: a0/b0 from the per-subject
    /// sample mean and variance, d0 = 7.25 and e0 = 1 so that the prior mean of
    /// sigma2 is 0.16, trivial one-cluster base partitions.
    static Hyperparams defaults_for(const DataMatrix& data) {
        Hyperparams h;
        const int I = data.n_conditions;
        const int J = data.n_subjects;
        h.a0.resize(static_cast<std::size_t>(J));
        h.b0.resize(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j) {
            const double* col = data.column(j);
            double mean = 0.0;
            for (int i = 0; i < I; ++i) mean += col[i];
            mean /= static_cast<double>(I);
            double ss = 0.0;
            for (int i = 0; i < I; ++i) ss += (col[i] - mean) * (col[i] - mean);
            h.a0[static_cast<std::size_t>(j)] = mean;
            h.b0[static_cast<std::size_t>(j)] = ss / static_cast<double>(I - 1);
        }
        h.d0.assign(static_cast<std::size_t>(J), 7.25);
        h.e0.assign(static_cast<std::size_t>(J), 1.0);
        h.c0 = Partition::singletons_merged(J);
        h.nu0 = Partition::singletons_merged(I);
        return h;
    }
};

/// Normal kernel parameters shared by the conditions of one cluster.
struct ClusterParams {
    double mu = 0.0;
    double sigma2 = 1.0;
};

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Normal log density of one observation.
inline double log_likelihood_point(double y, const ClusterParams& params) {
    const double dev = y - params.mu;
    return -0.5 * (kLogTwoPi + std::log(params.sigma2)) - dev * dev / (2.0 * params.sigma2);
}

/// Draw cluster parameters from the prior H for subject j.
inline ClusterParams sample_theta_prior(int j, const Hyperparams& h, Rng& rng) {
    ClusterParams theta;
    const auto ju = static_cast<std::size_t>(j);
    theta.mu = rng.normal(h.a0[ju], std::sqrt(h.b0[ju]));
    theta.sigma2 = rng.inverse_gamma(h.d0[ju], h.e0[ju]);
    return theta;
}

namespace detail {

/// Mean and variance of mu's Normal full conditional given sigma2 and the
/// cluster's m observations with sum `sum_y`.
inline std::pair<double, double> posterior_mu_params(int m, double sum_y, double sigma2, double a0, double b0) {
    const double precision = 1.0 / b0 + static_cast<double>(m) / sigma2;
    const double mean = (a0 / b0 + sum_y / sigma2) / precision;
    return {mean, 1.0 / precision};
}

/// Shape and scale of sigma2's Inverse-Gamma full conditional given mu and
/// the cluster's m observations with squared-deviation sum `sum_sq_dev`.
inline std::pair<double, double> posterior_sigma2_params(int m, double sum_sq_dev, double d0, double e0) {
    return {d0 + 0.5 * static_cast<double>(m), e0 + 0.5 * sum_sq_dev};
}

} // namespace detail

} // namespace hsp
