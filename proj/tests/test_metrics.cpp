#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hsp/metrics.hpp"
#include "hsp/partition.hpp"
#include "hsp/rng.hpp"
#include "oracles.hpp"

using namespace hsp;

namespace {
Partition parts(std::vector<int> labels) { return canonicalize(labels); }
} // namespace

TEST_CASE("adjusted_rand_index on spec'd pairs") {
    CHECK(adjusted_rand_index(parts({1, 1, 2, 2}), parts({1, 1, 2, 2})) == 1.0);
    CHECK_THAT(adjusted_rand_index(parts({1, 1, 2, 2}), parts({1, 2, 1, 2})),
               Catch::Matchers::WithinAbs(-0.5, 1e-14));
    CHECK_THAT(adjusted_rand_index(parts({1, 1, 1}), parts({1, 2, 3})), Catch::Matchers::WithinAbs(0.0, 1e-14));
    // degenerate: both all-singletons are identical, so 1 by equality
    CHECK(adjusted_rand_index(parts({1, 2, 3}), parts({1, 2, 3})) == 1.0);
}

TEST_CASE("symmetrized_f1 identities") {
    CHECK(symmetrized_f1(parts({1, 2, 1, 3}), parts({1, 2, 1, 3})) == 1.0);
    // directed scores from the set-matching oracle
    CHECK_THAT(symmetrized_f1(parts({1, 1, 1, 1}), parts({1, 1, 2, 2})),
               Catch::Matchers::WithinAbs(oracles::set_matching_f1(parts({1, 1, 1, 1}), parts({1, 1, 2, 2})), 1e-14));
    CHECK_THAT(symmetrized_f1(parts({1, 2}), parts({1, 1})),
               Catch::Matchers::WithinAbs(oracles::set_matching_f1(parts({1, 2}), parts({1, 1})), 1e-14));
    // hand arithmetic for the 4-item case: forward 2*2/(4+2) per cluster of q
    // gives (2*2/3 + 2*2/3)/4 = 2/3; backward 4/6 each as well
    CHECK_THAT(symmetrized_f1(parts({1, 1, 1, 1}), parts({1, 1, 2, 2})), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-14));
}

TEST_CASE("f1 equals one only for identical partitions") {
    Rng rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(8));
        const Partition p = oracles::random_partition(n, rng);
        const Partition q = oracles::random_partition(n, rng);
        const double f1 = symmetrized_f1(p, q);
        if (p == q) CHECK(f1 == 1.0);
        else CHECK(f1 < 1.0);
    }
}

TEST_CASE("variation_of_information on spec'd pairs") {
    CHECK(variation_of_information(parts({1, 1, 2}), parts({1, 1, 2})) == 0.0);
    CHECK_THAT(variation_of_information(parts({1, 1, 2, 2}), parts({1, 2, 3, 4})),
               Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
    CHECK_THAT(variation_of_information(parts({1, 1, 1}), parts({1, 2, 3})),
               Catch::Matchers::WithinAbs(std::log(3.0), 1e-12));
}

TEST_CASE("metrics agree with brute-force oracles on random pairs") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(9));
        const Partition p = oracles::random_partition(n, rng);
        const Partition q = oracles::random_partition(n, rng);
        CHECK_THAT(adjusted_rand_index(p, q), Catch::Matchers::WithinAbs(oracles::pair_count_ari(p, q), 1e-10));
        CHECK_THAT(symmetrized_f1(p, q), Catch::Matchers::WithinAbs(oracles::set_matching_f1(p, q), 1e-10));
        CHECK_THAT(variation_of_information(p, q), Catch::Matchers::WithinAbs(oracles::entropy_vi(p, q), 1e-10));
    }
}

TEST_CASE("metrics are symmetric and label-invariant") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(9));
        const Partition p = oracles::random_partition(n, rng);
        const Partition q = oracles::random_partition(n, rng);
        // summation order flips with the argument order, so compare to 1e-13
        CHECK_THAT(adjusted_rand_index(p, q), Catch::Matchers::WithinAbs(adjusted_rand_index(q, p), 1e-13));
        CHECK_THAT(symmetrized_f1(p, q), Catch::Matchers::WithinAbs(symmetrized_f1(q, p), 1e-13));
        CHECK_THAT(variation_of_information(p, q), Catch::Matchers::WithinAbs(variation_of_information(q, p), 1e-13));
        // relabeling: reverse the label values of q
        std::vector<int> relabeled(q.labels());
        const int max_lab = q.num_clusters();
        for (int& v : relabeled) v = max_lab + 1 - v;
        const Partition q2 = canonicalize(relabeled);
        CHECK_THAT(adjusted_rand_index(p, q2), Catch::Matchers::WithinAbs(adjusted_rand_index(p, q), 1e-14));
        CHECK_THAT(symmetrized_f1(p, q2), Catch::Matchers::WithinAbs(symmetrized_f1(p, q), 1e-14));
        CHECK_THAT(variation_of_information(p, q2), Catch::Matchers::WithinAbs(variation_of_information(p, q), 1e-14));
    }
}

TEST_CASE("vi satisfies the metric axioms on random triples") {
    Rng rng(321);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(9));
        const Partition a = oracles::random_partition(n, rng);
        const Partition b = oracles::random_partition(n, rng);
        const Partition c = oracles::random_partition(n, rng);
        const double ab = variation_of_information(a, b);
        const double bc = variation_of_information(b, c);
        const double ac = variation_of_information(a, c);
        CHECK(ab >= 0.0);
        if (a == b) CHECK(ab == 0.0);
        else CHECK(ab > 0.0);
        CHECK(ac <= ab + bc + 1e-12);
    }
}

TEST_CASE("coclustering_matrix basics") {
    // single partition: entries mirror it exactly
    const Partition p = parts({1, 1, 2});
    const auto single = coclustering_matrix(std::vector<Partition>{p});
    CHECK(single(0, 1) == 1.0);
    CHECK(single(0, 2) == 0.0);
    CHECK(single(1, 2) == 0.0);
    CHECK(single(2, 2) == 1.0);

    const auto half = coclustering_matrix(std::vector<Partition>{parts({1, 1}), parts({1, 2})});
    CHECK(half(0, 1) == 0.5);
    CHECK(half(1, 0) == 0.5);

    CHECK_THROWS_AS(coclustering_matrix(std::vector<Partition>{}), std::invalid_argument);
}

TEST_CASE("coclustering_matrix matches a direct pairwise count") {
    Rng rng(777);
    std::vector<Partition> sample;
    for (int t = 0; t < 500; ++t) sample.push_back(oracles::random_partition(8, rng));
    const auto m = coclustering_matrix(sample);
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
            int count = 0;
            for (const auto& p : sample)
                if (p.label(u) == p.label(v)) ++count;
            CHECK(m(u, v) == static_cast<double>(count) / 500.0);
        }
    }
}

TEST_CASE("vi_point_estimate picks the sample minimizing average VI") {
    // all identical: that partition
    std::vector<Partition> all_same(5, parts({1, 2, 1}));
    CHECK(vi_point_estimate(all_same) == parts({1, 2, 1}));

    // 9 copies of one partition vs 1 of another: the majority wins
    std::vector<Partition> mixed(9, parts({1, 1, 2}));
    mixed.push_back(parts({1, 2, 3}));
    CHECK(vi_point_estimate(mixed) == parts({1, 1, 2}));

    CHECK_THROWS_AS(vi_point_estimate(std::vector<Partition>{}), std::invalid_argument);
}

TEST_CASE("vi_point_estimate agrees with exhaustive averaging") {
    Rng rng(31);
    std::vector<Partition> sample;
    for (int t = 0; t < 60; ++t) sample.push_back(oracles::random_partition(6, rng));
    const Partition best = vi_point_estimate(sample);
    double best_avg = 0.0;
    for (const auto& q : sample) best_avg += variation_of_information(best, q);
    for (const auto& candidate : sample) {
        double avg = 0.0;
        for (const auto& q : sample) avg += variation_of_information(candidate, q);
        CHECK(best_avg <= avg + 1e-12);
    }
}
