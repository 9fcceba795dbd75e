#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hsp/data_matrix.hpp"
#include "hsp/error.hpp"
#include "hsp/model.hpp"
#include "hsp/partition.hpp"
#include "hsp/rng.hpp"
#include "hsp/shrinkage.hpp"

namespace hsp {

struct SamplerConfig {
    std::int64_t iterations = 10000;
    std::int64_t burn_in = 2000;
    std::int64_t thin = 1;
    std::uint64_t seed = 0;
    bool prior_only = false;
    bool record_nu_star = false;
    int shuffle_size = 0; // permutation MH proposal: 0 = full shuffle, else k-element partial shuffle

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("SamplerConfig: iterations must be >= 1");
        if (burn_in < 0 || burn_in >= iterations)
            throw std::invalid_argument("SamplerConfig: burn_in must lie in [0, iterations)");
        if (thin < 1) throw std::invalid_argument("SamplerConfig: thin must be >= 1");
        if (shuffle_size < 0 || shuffle_size == 1)
            throw std::invalid_argument("SamplerConfig: shuffle_size must be 0 (full) or >= 2");
    }
};

/// Post-burn-in sampled partitions, one entry per kept iteration.
struct PartitionTrace {
    std::vector<Partition> subject_partitions;
    std::vector<std::vector<Partition>> condition_partitions; // [kept][subject]
    std::vector<std::vector<Partition>> base_partitions;      // [kept][group], only when recorded
    std::int64_t kept_count() const { return static_cast<std::int64_t>(subject_partitions.size()); }
};

struct AcceptanceStats {
    std::int64_t delta_proposed = 0, delta_accepted = 0;
    std::int64_t zeta_proposed = 0, zeta_accepted = 0;
    std::int64_t eps_proposed = 0, eps_accepted = 0;

    static double rate(std::int64_t accepted, std::int64_t proposed) {
        return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
    }
};

/// Full sampler state. Cluster-aligned vectors follow the canonical labels of
/// their partition: nu_star/eps_star follow c, theta[j] follows pi[j].
struct HspState {
    Partition c;
    Permutation zeta;
    std::vector<Partition> nu_star;
    std::vector<Permutation> eps_star;
    std::vector<Partition> pi;
    std::vector<Permutation> delta;
    std::vector<std::vector<ClusterParams>> theta;

    int n_subjects() const { return c.n_items(); }
    int n_conditions() const { return pi.empty() ? 0 : pi.front().n_items(); }
};

inline void check_consistency(const HspState& st, int n_conditions, int n_subjects) {
    const auto fail = [](const std::string& what) { throw InternalError("HspState: " + what); };
    if (st.c.n_items() != n_subjects) fail("subject partition has wrong size");
    if (st.zeta.size() != n_subjects) fail("subject permutation has wrong size");
    const auto K = static_cast<std::size_t>(st.c.num_clusters());
    if (st.nu_star.size() != K || st.eps_star.size() != K) fail("base partition count does not match subject clusters");
    if (st.pi.size() != static_cast<std::size_t>(n_subjects) || st.delta.size() != st.pi.size() ||
        st.theta.size() != st.pi.size())
        fail("per-subject vectors have wrong size");
    for (const auto& nu : st.nu_star)
        if (nu.n_items() != n_conditions) fail("base partition has wrong size");
    for (const auto& eps : st.eps_star)
        if (eps.size() != n_conditions) fail("base permutation has wrong size");
    for (std::size_t j = 0; j < st.pi.size(); ++j) {
        if (st.pi[j].n_items() != n_conditions) fail("condition partition has wrong size");
        if (st.delta[j].size() != n_conditions) fail("condition permutation has wrong size");
        if (st.theta[j].size() != static_cast<std::size_t>(st.pi[j].num_clusters()))
            fail("theta not aligned with condition clusters");
    }
}

namespace detail {

/// Relabel `labels` into canonical form in place. Returns, via `source`, the
/// old 1-based label each new cluster came from, so payload vectors aligned
/// with the old labels can be reordered (and entries of emptied clusters
/// dropped).
inline void canonicalize_labels_map(std::vector<int>& labels, int old_max_label, std::vector<int>& source) {
    thread_local std::vector<int> map;
    map.assign(static_cast<std::size_t>(old_max_label) + 1, 0);
    source.clear();
    int next = 0;
    for (int& v : labels) {
        int& m = map[static_cast<std::size_t>(v)];
        if (m == 0) {
            m = ++next;
            source.push_back(v);
        }
        v = m;
    }
}

template <typename P>
inline void reorder_payload(const std::vector<int>& source, std::vector<P>& payload) {
    std::vector<P> out;
    out.reserve(source.size());
    for (int old_label : source) out.push_back(std::move(payload[static_cast<std::size_t>(old_label) - 1]));
    payload = std::move(out);
}

/// Reusable buffers for one chain's sweeps; not shared across threads.
struct SweepScratch {
    std::vector<double> lambda_vec, rho_vec, tau_vec;
    SpExpTable lambda_table, rho_table, tau_table;
    SpWalk walk_a, walk_b;
    SpWalkCheckpoint ck_a;
    std::vector<SpWalk> walk_pool;
    std::vector<SpWalkCheckpoint> ck_pool;
    std::vector<int> counts, pos_buf, cand_labels, labels_buf, source_buf, select_buf, value_buf;
    std::vector<double> logw;

    SweepScratch(int n_conditions, int n_subjects, const Hyperparams& h)
        : lambda_vec(static_cast<std::size_t>(n_conditions), h.lambda),
          rho_vec(static_cast<std::size_t>(n_conditions), h.rho),
          tau_vec(static_cast<std::size_t>(n_subjects), h.tau),
          walk_pool(static_cast<std::size_t>(n_subjects)),
          ck_pool(static_cast<std::size_t>(n_subjects)) {
        // tables are ignored on the log-space path (shrinkage > 600)
        lambda_table.build(h.lambda, n_conditions);
        rho_table.build(h.rho, n_conditions);
        tau_table.build(h.tau, n_subjects);
    }
};

/// Uniform proposal for the permutation MH moves: a full reshuffle, or a
/// k-element partial shuffle (uniform k-subset of positions, uniform
/// rearrangement of the selected entries). Both are symmetric.
inline void propose_permutation(const Permutation& current, int shuffle_size, Rng& rng, Permutation& proposal,
                                SweepScratch& sc) {
    proposal = current;
    auto& ord = proposal.order();
    const int n = static_cast<int>(ord.size());
    if (shuffle_size <= 0 || shuffle_size >= n) {
        rng.shuffle(std::span<int>(ord));
        return;
    }
    sc.select_buf.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sc.select_buf[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < shuffle_size; ++i) {
        const auto r = static_cast<std::size_t>(i + rng.uniform_int(n - i));
        std::swap(sc.select_buf[static_cast<std::size_t>(i)], sc.select_buf[r]);
    }
    sc.value_buf.resize(static_cast<std::size_t>(shuffle_size));
    for (int i = 0; i < shuffle_size; ++i)
        sc.value_buf[static_cast<std::size_t>(i)] = ord[static_cast<std::size_t>(sc.select_buf[static_cast<std::size_t>(i)])];
    rng.shuffle(std::span<int>(sc.value_buf.data(), static_cast<std::size_t>(shuffle_size)));
    for (int i = 0; i < shuffle_size; ++i)
        ord[static_cast<std::size_t>(sc.select_buf[static_cast<std::size_t>(i)])] = sc.value_buf[static_cast<std::size_t>(i)];
}

} // namespace detail

/// Sweep step 1: redraw every cluster's (mu, sigma2) from its full
/// conditional, one conjugate block at a time (mu | sigma2, then
/// sigma2 | mu). With `prior_only` the data contribution is dropped and the
/// blocks sample the prior.
inline void update_theta(HspState& st, const DataMatrix& data, const Hyperparams& h, bool prior_only, Rng& rng) {
    const int I = st.n_conditions();
    const int J = st.n_subjects();
    for (int j = 0; j < J; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        auto& thetas = st.theta[ju];
        if (thetas.size() != static_cast<std::size_t>(st.pi[ju].num_clusters()))
            throw InternalError("update_theta: theta not aligned with condition clusters");
        for (std::size_t l = 0; l < thetas.size(); ++l) {
            int m = 0;
            double sum_y = 0.0;
            if (!prior_only) {
                for (int i = 0; i < I; ++i) {
                    if (st.pi[ju].label(i) == static_cast<int>(l) + 1) {
                        ++m;
                        sum_y += data(i, j);
                    }
                }
            }
            auto& th = thetas[l];
            const auto [mu_mean, mu_var] = detail::posterior_mu_params(m, sum_y, th.sigma2, h.a0[ju], h.b0[ju]);
            th.mu = rng.normal(mu_mean, std::sqrt(mu_var));
            double sum_sq_dev = 0.0;
            if (!prior_only) {
                for (int i = 0; i < I; ++i) {
                    if (st.pi[ju].label(i) == static_cast<int>(l) + 1) {
                        const double dev = data(i, j) - th.mu;
                        sum_sq_dev += dev * dev;
                    }
                }
            }
            const auto [shape, scale] = detail::posterior_sigma2_params(m, sum_sq_dev, h.d0[ju], h.e0[ju]);
            th.sigma2 = rng.inverse_gamma(shape, scale);
        }
    }
}

/// Step 2: Gibbs-resample every condition label pi[i,j] from its exact full
/// conditional over the existing clusters plus one new cluster. The new
/// cluster's parameters are an auxiliary draw from H (when the condition is
/// currently a singleton, its own parameters serve as the auxiliary, matching
/// the one-auxiliary-component update).
inline void step_condition_partitions(HspState& st, const DataMatrix& data, const Hyperparams& h, bool prior_only,
                                      Rng& rng, detail::SweepScratch& sc) {
    const int I = st.n_conditions();
    const int J = st.n_subjects();
    for (int j = 0; j < J; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const Partition& nu = st.nu_star[static_cast<std::size_t>(st.c.label(j)) - 1];
        const std::vector<int>& order = st.delta[ju].order();
        sc.pos_buf.resize(static_cast<std::size_t>(I));
        for (int t = 0; t < I; ++t) sc.pos_buf[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = t;
        sc.labels_buf = st.pi[ju].labels();
        auto& thetas = st.theta[ju];

        sc.walk_a.bind(nu.labels().data(), sc.lambda_vec.data(), order.data(), I, h.beta, &sc.lambda_table);

        for (int i = 0; i < I; ++i) {
            const int L = static_cast<int>(thetas.size());
            sc.counts.assign(static_cast<std::size_t>(L) + 1, 0);
            for (int v : sc.labels_buf) ++sc.counts[static_cast<std::size_t>(v)];
            const int cur = sc.labels_buf[static_cast<std::size_t>(i)];
            const bool singleton = sc.counts[static_cast<std::size_t>(cur)] == 1;
            const int new_label = singleton ? cur : L + 1;
            const ClusterParams aux = singleton ? thetas[static_cast<std::size_t>(cur) - 1] : sample_theta_prior(j, h, rng);

            sc.cand_labels.clear();
            for (int v = 1; v <= L; ++v)
                if (!(singleton && v == cur)) sc.cand_labels.push_back(v);
            sc.cand_labels.push_back(new_label);

            sc.walk_a.set_bounds(L + 1, nu.num_clusters());
            sc.walk_a.reset();
            const int pos = sc.pos_buf[static_cast<std::size_t>(i)];
            for (int t = 0; t < pos; ++t)
                sc.walk_a.advance_forced(sc.labels_buf[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])]);
            sc.walk_a.save(sc.ck_a);

            sc.logw.clear();
            for (std::size_t ci = 0; ci < sc.cand_labels.size(); ++ci) {
                const int cand = sc.cand_labels[ci];
                sc.labels_buf[static_cast<std::size_t>(i)] = cand;
                sc.walk_a.restore(sc.ck_a);
                for (int t = pos; t < I; ++t)
                    sc.walk_a.advance_observed(sc.labels_buf[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])]);
                double lp = sc.walk_a.log_prob();
                if (!prior_only) {
                    // a singleton's own parameters double as the auxiliary, so cand <= L always maps into thetas
                    const ClusterParams& th = cand == L + 1 ? aux : thetas[static_cast<std::size_t>(cand) - 1];
                    lp += log_likelihood_point(data(i, j), th);
                }
                sc.logw.push_back(lp);
            }

            const auto pick = static_cast<std::size_t>(rng.sample_log_weights(sc.logw));
            const int chosen = sc.cand_labels[pick];
            sc.labels_buf[static_cast<std::size_t>(i)] = chosen;
            if (chosen == L + 1 && !singleton) thetas.push_back(aux);
            detail::canonicalize_labels_map(sc.labels_buf, L + 1, sc.source_buf);
            detail::reorder_payload(sc.source_buf, thetas);
        }
        st.pi[ju] = Partition::from_labels(sc.labels_buf);
    }
}

/// Step 3: symmetric MH on each subject's condition visit order delta_j.
inline void step_condition_permutations(HspState& st, const Hyperparams& h, int shuffle_size, Rng& rng,
                                        AcceptanceStats& stats, detail::SweepScratch& sc) {
    const int J = st.n_subjects();
    Permutation proposal;
    for (int j = 0; j < J; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const Partition& nu = st.nu_star[static_cast<std::size_t>(st.c.label(j)) - 1];
        detail::propose_permutation(st.delta[ju], shuffle_size, rng, proposal, sc);
        const double lp_cur = detail::sp_log_pmf_raw(st.pi[ju].labels(), nu.labels(), sc.lambda_vec,
                                                     st.delta[ju].order(), h.beta, sc.walk_a, &sc.lambda_table);
        const double lp_new = detail::sp_log_pmf_raw(st.pi[ju].labels(), nu.labels(), sc.lambda_vec, proposal.order(),
                                                     h.beta, sc.walk_a, &sc.lambda_table);
        ++stats.delta_proposed;
        if (std::log(rng.uniform()) <= lp_new - lp_cur) {
            st.delta[ju] = proposal;
            ++stats.delta_accepted;
        }
    }
}

/// Step 4: Gibbs-resample every subject's cluster over the existing clusters
/// plus one new cluster. A new cluster carries an auxiliary (nu*, eps*) pair:
/// a fresh uniform permutation and a base partition drawn from the
/// SP(nu0, rho, ...) prior; a subject that is currently a singleton reuses its
/// own pair as the auxiliary.
inline void step_subject_partition(HspState& st, const Hyperparams& h, Rng& rng, detail::SweepScratch& sc) {
    const int I = st.n_conditions();
    const int J = st.n_subjects();
    const std::vector<int>& zeta_order = st.zeta.order();
    sc.pos_buf.resize(static_cast<std::size_t>(J));
    for (int t = 0; t < J; ++t) sc.pos_buf[static_cast<std::size_t>(zeta_order[static_cast<std::size_t>(t)])] = t;
    sc.labels_buf = st.c.labels();

    sc.walk_a.bind(h.c0.labels().data(), sc.tau_vec.data(), zeta_order.data(), J, h.alpha0, &sc.tau_table);

    for (int j = 0; j < J; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const int K = static_cast<int>(st.nu_star.size());
        sc.counts.assign(static_cast<std::size_t>(K) + 1, 0);
        for (int v : sc.labels_buf) ++sc.counts[static_cast<std::size_t>(v)];
        const int cur = sc.labels_buf[ju];
        const bool singleton = sc.counts[static_cast<std::size_t>(cur)] == 1;
        const int new_label = singleton ? cur : K + 1;

        Permutation eps_aux;
        Partition nu_aux;
        if (singleton) {
            eps_aux = st.eps_star[static_cast<std::size_t>(cur) - 1];
            nu_aux = st.nu_star[static_cast<std::size_t>(cur) - 1];
        } else {
            eps_aux = uniform_permutation(I, rng);
            nu_aux = sp_sample(SpParams(h.nu0, sc.rho_vec, eps_aux, h.beta0), rng);
        }

        sc.cand_labels.clear();
        for (int v = 1; v <= K; ++v)
            if (!(singleton && v == cur)) sc.cand_labels.push_back(v);
        sc.cand_labels.push_back(new_label);

        sc.walk_a.set_bounds(K + 1, h.c0.num_clusters());
        sc.walk_a.reset();
        const int pos = sc.pos_buf[ju];
        for (int t = 0; t < pos; ++t)
            sc.walk_a.advance_forced(sc.labels_buf[static_cast<std::size_t>(zeta_order[static_cast<std::size_t>(t)])]);
        sc.walk_a.save(sc.ck_a);

        sc.logw.clear();
        for (std::size_t ci = 0; ci < sc.cand_labels.size(); ++ci) {
            const int cand = sc.cand_labels[ci];
            sc.labels_buf[ju] = cand;
            sc.walk_a.restore(sc.ck_a);
            for (int t = pos; t < J; ++t)
                sc.walk_a.advance_observed(sc.labels_buf[static_cast<std::size_t>(zeta_order[static_cast<std::size_t>(t)])]);
            double lp = sc.walk_a.log_prob();
            const bool is_new = cand == new_label;
            const Partition& nu_cand = (is_new && !singleton) ? nu_aux : st.nu_star[static_cast<std::size_t>(cand) - 1];
            lp += detail::sp_log_pmf_raw(st.pi[ju].labels(), nu_cand.labels(), sc.lambda_vec, st.delta[ju].order(),
                                         h.beta, sc.walk_b, &sc.lambda_table);
            sc.logw.push_back(lp);
        }

        const auto pick = static_cast<std::size_t>(rng.sample_log_weights(sc.logw));
        const int chosen = sc.cand_labels[pick];
        sc.labels_buf[ju] = chosen;
        if (chosen == K + 1 && !singleton) {
            st.nu_star.push_back(nu_aux);
            st.eps_star.push_back(eps_aux);
        }
        detail::canonicalize_labels_map(sc.labels_buf, K + 1, sc.source_buf);
        detail::reorder_payload(sc.source_buf, st.nu_star);
        detail::reorder_payload(sc.source_buf, st.eps_star);
    }
    st.c = Partition::from_labels(sc.labels_buf);
}

/// Step 5: symmetric MH on the subject visit order zeta.
inline void step_subject_permutation(HspState& st, const Hyperparams& h, int shuffle_size, Rng& rng,
                                     AcceptanceStats& stats, detail::SweepScratch& sc) {
    Permutation proposal;
    detail::propose_permutation(st.zeta, shuffle_size, rng, proposal, sc);
    const double lp_cur = detail::sp_log_pmf_raw(st.c.labels(), h.c0.labels(), sc.tau_vec, st.zeta.order(), h.alpha0,
                                                 sc.walk_a, &sc.tau_table);
    const double lp_new = detail::sp_log_pmf_raw(st.c.labels(), h.c0.labels(), sc.tau_vec, proposal.order(), h.alpha0,
                                                 sc.walk_a, &sc.tau_table);
    ++stats.zeta_proposed;
    if (std::log(rng.uniform()) <= lp_new - lp_cur) {
        st.zeta = proposal;
        ++stats.zeta_accepted;
    }
}

/// Step 6: Gibbs-resample every label of every group base partition nu*_k
/// from its exact full conditional, which couples the SP(nu0, rho) prior with
/// the SP(nu*_k, lambda) terms of the group's subjects.
inline void step_base_partitions(HspState& st, const Hyperparams& h, Rng& rng, detail::SweepScratch& sc) {
    const int I = st.n_conditions();
    const int J = st.n_subjects();
    const int K = static_cast<int>(st.nu_star.size());
    std::vector<int>& members = sc.select_buf;
    for (int k = 0; k < K; ++k) {
        members.clear();
        for (int j = 0; j < J; ++j)
            if (st.c.label(j) == k + 1) members.push_back(j);

        sc.labels_buf = st.nu_star[static_cast<std::size_t>(k)].labels();
        const std::vector<int>& eps_order = st.eps_star[static_cast<std::size_t>(k)].order();
        sc.pos_buf.resize(static_cast<std::size_t>(I));
        for (int t = 0; t < I; ++t) sc.pos_buf[static_cast<std::size_t>(eps_order[static_cast<std::size_t>(t)])] = t;

        sc.walk_a.bind(h.nu0.labels().data(), sc.rho_vec.data(), eps_order.data(), I, h.beta0, &sc.rho_table);
        for (std::size_t mi = 0; mi < members.size(); ++mi) {
            const auto ju = static_cast<std::size_t>(members[mi]);
            sc.walk_pool[mi].bind(sc.labels_buf.data(), sc.lambda_vec.data(), st.delta[ju].order().data(), I, h.beta,
                                  &sc.lambda_table);
        }

        for (int i = 0; i < I; ++i) {
            int D = 0;
            for (int v : sc.labels_buf) D = std::max(D, v);
            sc.counts.assign(static_cast<std::size_t>(D) + 1, 0);
            for (int v : sc.labels_buf) ++sc.counts[static_cast<std::size_t>(v)];
            const int cur = sc.labels_buf[static_cast<std::size_t>(i)];
            const bool singleton = sc.counts[static_cast<std::size_t>(cur)] == 1;
            const int new_label = singleton ? cur : D + 1;

            sc.cand_labels.clear();
            for (int v = 1; v <= D; ++v)
                if (!(singleton && v == cur)) sc.cand_labels.push_back(v);
            sc.cand_labels.push_back(new_label);

            // checkpoint the nu-prior walk just before item i
            sc.walk_a.set_bounds(D + 1, h.nu0.num_clusters());
            sc.walk_a.reset();
            const int pos = sc.pos_buf[static_cast<std::size_t>(i)];
            for (int t = 0; t < pos; ++t)
                sc.walk_a.advance_forced(sc.labels_buf[static_cast<std::size_t>(eps_order[static_cast<std::size_t>(t)])]);
            sc.walk_a.save(sc.ck_a);

            // checkpoint each member's pi walk just before item i in its own visit order
            for (std::size_t mi = 0; mi < members.size(); ++mi) {
                const auto ju = static_cast<std::size_t>(members[mi]);
                const std::vector<int>& dord = st.delta[ju].order();
                auto& w = sc.walk_pool[mi];
                w.set_bounds(st.pi[ju].num_clusters(), D + 1);
                w.reset();
                int pj = 0;
                while (dord[static_cast<std::size_t>(pj)] != i) {
                    w.advance_forced(st.pi[ju].label(dord[static_cast<std::size_t>(pj)]));
                    ++pj;
                }
                sc.walk_pool[mi].save(sc.ck_pool[mi]);
            }

            sc.logw.clear();
            for (std::size_t ci = 0; ci < sc.cand_labels.size(); ++ci) {
                sc.labels_buf[static_cast<std::size_t>(i)] = sc.cand_labels[ci];
                sc.walk_a.restore(sc.ck_a);
                for (int t = pos; t < I; ++t)
                    sc.walk_a.advance_observed(sc.labels_buf[static_cast<std::size_t>(eps_order[static_cast<std::size_t>(t)])]);
                double lp = sc.walk_a.log_prob();
                for (std::size_t mi = 0; mi < members.size(); ++mi) {
                    const auto ju = static_cast<std::size_t>(members[mi]);
                    const std::vector<int>& dord = st.delta[ju].order();
                    auto& w = sc.walk_pool[mi];
                    w.restore(sc.ck_pool[mi]);
                    while (!w.done()) w.advance_observed(st.pi[ju].label(dord[static_cast<std::size_t>(w.step())]));
                    lp += w.log_prob();
                }
                sc.logw.push_back(lp);
            }

            const auto pick = static_cast<std::size_t>(rng.sample_log_weights(sc.logw));
            sc.labels_buf[static_cast<std::size_t>(i)] = sc.cand_labels[pick];
            detail::canonicalize_labels_map(sc.labels_buf, D + 1, sc.source_buf);
        }
        st.nu_star[static_cast<std::size_t>(k)] = Partition::from_labels(sc.labels_buf);
    }
}

/// Step 7: symmetric MH on each group's condition visit order eps*_k.
inline void step_base_permutations(HspState& st, const Hyperparams& h, int shuffle_size, Rng& rng,
                                   AcceptanceStats& stats, detail::SweepScratch& sc) {
    Permutation proposal;
    for (std::size_t k = 0; k < st.nu_star.size(); ++k) {
        detail::propose_permutation(st.eps_star[k], shuffle_size, rng, proposal, sc);
        const double lp_cur = detail::sp_log_pmf_raw(st.nu_star[k].labels(), h.nu0.labels(), sc.rho_vec,
                                                     st.eps_star[k].order(), h.beta0, sc.walk_a, &sc.rho_table);
        const double lp_new = detail::sp_log_pmf_raw(st.nu_star[k].labels(), h.nu0.labels(), sc.rho_vec,
                                                     proposal.order(), h.beta0, sc.walk_a, &sc.rho_table);
        ++stats.eps_proposed;
        if (std::log(rng.uniform()) <= lp_new - lp_cur) {
            st.eps_star[k] = proposal;
            ++stats.eps_accepted;
        }
    }
}

/// Draw a full state from the HSP prior.
inline HspState init_state(int n_conditions, int n_subjects, const Hyperparams& h, Rng& rng) {
    HspState st;
    st.zeta = uniform_permutation(n_subjects, rng);
    const std::vector<double> tau_vec(static_cast<std::size_t>(n_subjects), h.tau);
    const std::vector<double> rho_vec(static_cast<std::size_t>(n_conditions), h.rho);
    const std::vector<double> lambda_vec(static_cast<std::size_t>(n_conditions), h.lambda);
    st.c = sp_sample(SpParams(h.c0, tau_vec, st.zeta, h.alpha0), rng);
    const int K = st.c.num_clusters();
    for (int k = 0; k < K; ++k) {
        st.eps_star.push_back(uniform_permutation(n_conditions, rng));
        st.nu_star.push_back(sp_sample(SpParams(h.nu0, rho_vec, st.eps_star.back(), h.beta0), rng));
    }
    for (int j = 0; j < n_subjects; ++j) {
        st.delta.push_back(uniform_permutation(n_conditions, rng));
        st.pi.push_back(sp_sample(
            SpParams(st.nu_star[static_cast<std::size_t>(st.c.label(j)) - 1], lambda_vec, st.delta.back(), h.beta), rng));
        std::vector<ClusterParams> thetas;
        for (int l = 0; l < st.pi.back().num_clusters(); ++l) thetas.push_back(sample_theta_prior(j, h, rng));
        st.theta.push_back(std::move(thetas));
    }
    return st;
}

struct ChainResult {
    PartitionTrace trace;
    AcceptanceStats acceptance;
    double wall_seconds = 0.0;
};

/// Run one chain: per iteration the seven sweep steps in order, recording
/// (c, {pi_j}) after burn-in at the thinning stride. Identical seed, config
/// and data give a bit-identical trace (within one build).
inline ChainResult run_chain(const DataMatrix& data, const Hyperparams& h, const SamplerConfig& cfg) {
    cfg.validate();
    const int I = data.n_conditions;
    const int J = data.n_subjects;
    if (I < 1 || J < 1) throw std::invalid_argument("run_chain: empty data matrix");
    h.validate(I, J);
    if (!cfg.prior_only && !data.standardized)
        throw std::invalid_argument("run_chain: data must be standardized unless running prior-only");

    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    HspState st = init_state(I, J, h, rng);
    detail::SweepScratch sc(I, J, h);

    ChainResult result;
    const std::int64_t kept = (cfg.iterations - cfg.burn_in) / cfg.thin;
    result.trace.subject_partitions.reserve(static_cast<std::size_t>(kept));
    result.trace.condition_partitions.reserve(static_cast<std::size_t>(kept));

    for (std::int64_t iter = 0; iter < cfg.iterations; ++iter) {
        update_theta(st, data, h, cfg.prior_only, rng);
        step_condition_partitions(st, data, h, cfg.prior_only, rng, sc);
        step_condition_permutations(st, h, cfg.shuffle_size, rng, result.acceptance, sc);
        step_subject_partition(st, h, rng, sc);
        step_subject_permutation(st, h, cfg.shuffle_size, rng, result.acceptance, sc);
        step_base_partitions(st, h, rng, sc);
        step_base_permutations(st, h, cfg.shuffle_size, rng, result.acceptance, sc);
        check_consistency(st, I, J);
        if (iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == cfg.thin - 1) {
            result.trace.subject_partitions.push_back(st.c);
            result.trace.condition_partitions.push_back(st.pi);
            if (cfg.record_nu_star) result.trace.base_partitions.push_back(st.nu_star);
        }
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

} // namespace hsp
