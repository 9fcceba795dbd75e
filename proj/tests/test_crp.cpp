#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "hsp/crp.hpp"
#include "hsp/partition.hpp"
#include "hsp/rng.hpp"
#include "oracles.hpp"

using namespace hsp;
using oracles::sequential_crp_log_pmf;

namespace {

std::vector<int> natural_order(int n) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    return order;
}

} // namespace

TEST_CASE("crp_log_pmf matches hand-derived sequential values") {
    // [1,1,1], beta=1: 1 * (1/2) * (2/3) = 1/3
    CHECK_THAT(crp_log_pmf(canonicalize(std::vector<int>{1, 1, 1}), 1.0),
               Catch::Matchers::WithinAbs(std::log(1.0 / 3.0), 1e-14));
    // [1,2,3], beta=1: 1 * (1/2) * (1/3) = 1/6
    CHECK_THAT(crp_log_pmf(canonicalize(std::vector<int>{1, 2, 3}), 1.0),
               Catch::Matchers::WithinAbs(std::log(1.0 / 6.0), 1e-14));
    // single item: only one partition
    CHECK_THAT(crp_log_pmf(canonicalize(std::vector<int>{1}), 0.7), Catch::Matchers::WithinAbs(0.0, 1e-14));
    CHECK_THAT(crp_log_pmf(canonicalize(std::vector<int>{1}), 3.0), Catch::Matchers::WithinAbs(0.0, 1e-14));
}

TEST_CASE("crp_log_pmf rejects non-positive mass") {
    CHECK_THROWS_AS(crp_log_pmf(canonicalize(std::vector<int>{1, 2}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(crp_log_pmf(canonicalize(std::vector<int>{1, 2}), -1.0), std::invalid_argument);
}

TEST_CASE("crp pmf sums to one over all partitions") {
    for (int n = 1; n <= 8; ++n) {
        const auto parts = enumerate_partitions(n);
        for (double beta : {0.5, 1.0, 2.0}) {
            double total = 0.0;
            for (const auto& p : parts) total += std::exp(crp_log_pmf(p, beta));
            CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-10));
        }
    }
}

TEST_CASE("crp closed form equals the sequential product in natural order") {
    for (int n = 1; n <= 8; ++n) {
        const auto order = natural_order(n);
        for (const auto& p : enumerate_partitions(n)) {
            for (double beta : {0.5, 1.0, 2.0}) {
                CHECK_THAT(crp_log_pmf(p, beta),
                           Catch::Matchers::WithinAbs(sequential_crp_log_pmf(p, beta, order), 1e-12));
            }
        }
    }
}

TEST_CASE("crp closed form is exchangeable: every visit order gives the same value") {
    for (int n = 2; n <= 5; ++n) {
        std::vector<int> order = natural_order(n);
        const auto parts = enumerate_partitions(n);
        do {
            for (const auto& p : parts) {
                CHECK_THAT(crp_log_pmf(p, 1.3), Catch::Matchers::WithinAbs(sequential_crp_log_pmf(p, 1.3, order), 1e-12));
            }
        } while (std::next_permutation(order.begin(), order.end()));
    }
}

TEST_CASE("crp_predictive examples") {
    CHECK(crp_predictive(std::vector<int>{}, 1, 1.0) == std::vector<double>{1.0});

    const auto two = crp_predictive(std::vector<int>{2}, 3, 1.0);
    REQUIRE(two.size() == 2);
    CHECK_THAT(two[0], Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    CHECK_THAT(two[1], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));

    const auto three = crp_predictive(std::vector<int>{1, 1}, 3, 2.0);
    REQUIRE(three.size() == 3);
    CHECK_THAT(three[0], Catch::Matchers::WithinAbs(0.25, 1e-15));
    CHECK_THAT(three[1], Catch::Matchers::WithinAbs(0.25, 1e-15));
    CHECK_THAT(three[2], Catch::Matchers::WithinAbs(0.5, 1e-15));
}

TEST_CASE("crp_predictive rejects inconsistent prefixes") {
    CHECK_THROWS_AS(crp_predictive(std::vector<int>{2}, 2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(crp_predictive(std::vector<int>{1}, 2, 0.0), std::invalid_argument);
}
