#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "hsp/data_matrix.hpp"
#include "hsp/model.hpp"
#include "hsp/rng.hpp"
#include "hsp/sampler.hpp"

using namespace hsp;

namespace {

/// Simpson-rule quadrature on [lo, hi].
double integrate(const std::function<double(double)>& f, double lo, double hi, int steps = 20000) {
    const double h = (hi - lo) / steps;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < steps; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double normal_pdf(double x, double mean, double var) {
    return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * 3.14159265358979323846 * var);
}

DataMatrix tiny_matrix() {
    DataMatrix data(3, 2);
    data(0, 0) = 1.0;
    data(1, 0) = 2.0;
    data(2, 0) = 3.0;
    data(0, 1) = -1.0;
    data(1, 1) = 0.0;
    data(2, 1) = 4.0;
    return data;
}

} // namespace

TEST_CASE("standardize centers and scales each subject column") {
    const DataMatrix out = standardize(tiny_matrix());
    CHECK(out.standardized);
    CHECK_THAT(out(0, 0), Catch::Matchers::WithinAbs(-1.0, 1e-12));
    CHECK_THAT(out(1, 0), Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(out(2, 0), Catch::Matchers::WithinAbs(1.0, 1e-12));
    for (int j = 0; j < out.n_subjects; ++j) {
        double mean = 0.0, ss = 0.0;
        for (int i = 0; i < out.n_conditions; ++i) mean += out(i, j);
        mean /= out.n_conditions;
        for (int i = 0; i < out.n_conditions; ++i) ss += (out(i, j) - mean) * (out(i, j) - mean);
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 1e-9));
        CHECK_THAT(ss / (out.n_conditions - 1), Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("standardize is idempotent") {
    const DataMatrix once = standardize(tiny_matrix());
    const DataMatrix twice = standardize(once);
    for (int i = 0; i < once.n_conditions; ++i)
        for (int j = 0; j < once.n_subjects; ++j) CHECK_THAT(twice(i, j), Catch::Matchers::WithinAbs(once(i, j), 1e-12));
}

TEST_CASE("standardize reports the degenerate subject by name") {
    DataMatrix data = tiny_matrix();
    data(0, 1) = 5.0;
    data(1, 1) = 5.0;
    data(2, 1) = 5.0;
    data.subject_names[1] = "smoker42";
    try {
        standardize(data);
        FAIL("expected DegenerateDataError");
    } catch (const DegenerateDataError& e) {
        CHECK(std::string(e.what()).find("smoker42") != std::string::npos);
    }
}

TEST_CASE("log_likelihood_point matches the Normal density") {
    CHECK_THAT(log_likelihood_point(0.0, {0.0, 1.0}),
               Catch::Matchers::WithinAbs(-0.5 * std::log(2.0 * 3.14159265358979323846), 1e-14));
    CHECK_THAT(log_likelihood_point(2.5, {2.5, 0.49}),
               Catch::Matchers::WithinAbs(-0.5 * std::log(2.0 * 3.14159265358979323846 * 0.49), 1e-14));
    CHECK_THAT(log_likelihood_point(1.0, {0.0, 0.16}),
               Catch::Matchers::WithinAbs(-0.5 * std::log(2.0 * 3.14159265358979323846 * 0.16) - 1.0 / 0.32, 1e-12));
}

TEST_CASE("theta prior has the configured sigma2 mean") {
    DataMatrix data(2, 1);
    data(0, 0) = 0.0;
    data(1, 0) = 1.0;
    Hyperparams h = Hyperparams::defaults_for(data);
    Rng rng(2024);
    const int draws = 100000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) sum += sample_theta_prior(0, h, rng).sigma2;
    const double mean = sum / draws;
    // InvGamma(7.25, 1): mean 0.16, variance 1 / (6.25^2 * 5.25)
    const double sd = std::sqrt(1.0 / (6.25 * 6.25 * 5.25));
    CHECK(std::abs(mean - 0.16) < 4.0 * sd / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("theta prior mu concentrates at a0 as b0 shrinks") {
    DataMatrix data(2, 1);
    data(0, 0) = 0.0;
    data(1, 0) = 1.0;
    Hyperparams h = Hyperparams::defaults_for(data);
    h.a0[0] = 0.37;
    h.b0[0] = 1e-12;
    Rng rng(5);
    for (int i = 0; i < 100; ++i) CHECK_THAT(sample_theta_prior(0, h, rng).mu, Catch::Matchers::WithinAbs(0.37, 1e-4));
}

TEST_CASE("theta prior draws are reproducible under a fixed seed") {
    DataMatrix data(2, 1);
    data(0, 0) = 0.0;
    data(1, 0) = 1.0;
    const Hyperparams h = Hyperparams::defaults_for(data);
    Rng a(31), b(31);
    for (int i = 0; i < 10; ++i) {
        const ClusterParams x = sample_theta_prior(0, h, a);
        const ClusterParams y = sample_theta_prior(0, h, b);
        CHECK(x.mu == y.mu);
        CHECK(x.sigma2 == y.sigma2);
    }
}

TEST_CASE("mu full conditional matches a quadrature oracle") {
    // two observations 0.1 and 0.2, sigma2 = 0.16, prior N(0, 1)
    const double sigma2 = 0.16, a0 = 0.0, b0 = 1.0;
    const auto posterior_kernel = [&](double mu) {
        return normal_pdf(mu, a0, b0) * normal_pdf(0.1, mu, sigma2) * normal_pdf(0.2, mu, sigma2);
    };
    const double z = integrate(posterior_kernel, -6.0, 6.0);
    const double oracle_mean = integrate([&](double mu) { return mu * posterior_kernel(mu); }, -6.0, 6.0) / z;
    const double oracle_second = integrate([&](double mu) { return mu * mu * posterior_kernel(mu); }, -6.0, 6.0) / z;
    const double oracle_var = oracle_second - oracle_mean * oracle_mean;

    const auto [mean, var] = detail::posterior_mu_params(2, 0.3, sigma2, a0, b0);
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(oracle_mean, 1e-8));
    CHECK_THAT(var, Catch::Matchers::WithinAbs(oracle_var, 1e-8));
    // conjugate algebra: shrinkage factor 1 / (1 + 2 / 0.16)
    CHECK_THAT(mean, Catch::Matchers::WithinAbs((0.3 / 0.16) / (1.0 + 2.0 / 0.16), 1e-14));
}

TEST_CASE("sigma2 full conditional matches a quadrature oracle") {
    // two observations at fixed mu; prior InvGamma(7.25, 1)
    const double mu = 0.05, d0 = 7.25, e0 = 1.0;
    const double y1 = 0.1, y2 = 0.6;
    const auto ig_pdf = [&](double s2) {
        return std::pow(s2, -d0 - 1.0) * std::exp(-e0 / s2); // unnormalized
    };
    const auto posterior_kernel = [&](double s2) {
        return ig_pdf(s2) * normal_pdf(y1, mu, s2) * normal_pdf(y2, mu, s2);
    };
    const double z = integrate(posterior_kernel, 1e-4, 3.0, 60000);
    const double oracle_mean = integrate([&](double s2) { return s2 * posterior_kernel(s2); }, 1e-4, 3.0, 60000) / z;

    const double ssd = (y1 - mu) * (y1 - mu) + (y2 - mu) * (y2 - mu);
    const auto [shape, scale] = detail::posterior_sigma2_params(2, ssd, d0, e0);
    CHECK_THAT(shape, Catch::Matchers::WithinAbs(8.25, 1e-15));
    CHECK_THAT(scale, Catch::Matchers::WithinAbs(e0 + 0.5 * ssd, 1e-15));
    CHECK_THAT(scale / (shape - 1.0), Catch::Matchers::WithinAbs(oracle_mean, 1e-6));
}

TEST_CASE("flat-prior limit: mu conditional approaches Normal(y, sigma2)") {
    const auto [mean, var] = detail::posterior_mu_params(1, 0.42, 0.25, 0.0, 1e12);
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.42, 1e-9));
    CHECK_THAT(var, Catch::Matchers::WithinAbs(0.25, 1e-9));
}

TEST_CASE("empty cluster: full conditionals equal the prior") {
    const auto [mean, var] = detail::posterior_mu_params(0, 0.0, 0.5, 0.3, 2.0);
    CHECK(mean == 0.3);
    CHECK(var == 2.0);
    const auto [shape, scale] = detail::posterior_sigma2_params(0, 0.0, 7.25, 1.0);
    CHECK(shape == 7.25);
    CHECK(scale == 1.0);
}

TEST_CASE("prior-mode theta Gibbs leaves the prior invariant") {
    // alternate the two conditionals with no data; marginal moments of the
    // sweep output must match the prior within 4 sigma
    const double a0 = 0.3, b0 = 2.0, d0 = 7.25, e0 = 1.0;
    Rng rng(404);
    const int sweeps = 100000;
    ClusterParams th{a0, e0 / (d0 - 1.0)};
    double mu_sum = 0.0, mu_sq = 0.0, s2_sum = 0.0, s2_sq = 0.0;
    for (int i = 0; i < sweeps; ++i) {
        const auto [m, v] = detail::posterior_mu_params(0, 0.0, th.sigma2, a0, b0);
        th.mu = rng.normal(m, std::sqrt(v));
        const auto [shape, scale] = detail::posterior_sigma2_params(0, 0.0, d0, e0);
        th.sigma2 = rng.inverse_gamma(shape, scale);
        mu_sum += th.mu;
        mu_sq += th.mu * th.mu;
        s2_sum += th.sigma2;
        s2_sq += th.sigma2 * th.sigma2;
    }
    const double n = sweeps;
    const double mu_mean = mu_sum / n, mu_var = mu_sq / n - mu_mean * mu_mean;
    const double s2_mean = s2_sum / n, s2_var = s2_sq / n - s2_mean * s2_mean;
    // prior: mu ~ N(a0, b0); sigma2 ~ InvGamma(d0, e0)
    CHECK(std::abs(mu_mean - a0) < 4.0 * std::sqrt(b0 / n));
    CHECK(std::abs(mu_var - b0) < 4.0 * std::sqrt(2.0 * b0 * b0 / n));
    const double ig_mean = e0 / (d0 - 1.0);
    const double ig_var = e0 * e0 / ((d0 - 1.0) * (d0 - 1.0) * (d0 - 2.0));
    CHECK(std::abs(s2_mean - ig_mean) < 4.0 * std::sqrt(ig_var / n));
    CHECK(std::abs(s2_var - ig_var) < 0.2 * ig_var);
}

TEST_CASE("update_theta draws from the conjugate full conditionals") {
    // one subject, one cluster holding y = {0.1, 0.2}; sigma2 pinned at 0.16
    // before each sweep so the mu draws follow Normal(b * sum(y)/sigma2, b)
    // with b = 1 / (1/b0 + 2/sigma2)
    DataMatrix data(2, 1);
    data(0, 0) = 0.1;
    data(1, 0) = 0.2;
    Hyperparams h = Hyperparams::defaults_for(data);
    h.a0[0] = 0.0;
    h.b0[0] = 1.0;

    HspState st;
    st.c = Partition::singletons_merged(1);
    st.zeta = Permutation::identity(1);
    st.nu_star = {Partition::singletons_merged(2)};
    st.eps_star = {Permutation::identity(2)};
    st.pi = {Partition::singletons_merged(2)};
    st.delta = {Permutation::identity(2)};
    st.theta = {{ClusterParams{0.0, 0.16}}};

    Rng rng(606);
    const int sweeps = 40000;
    double mu_sum = 0.0, mu_sq = 0.0;
    for (int i = 0; i < sweeps; ++i) {
        st.theta[0][0].sigma2 = 0.16;
        update_theta(st, data, h, false, rng);
        mu_sum += st.theta[0][0].mu;
        mu_sq += st.theta[0][0].mu * st.theta[0][0].mu;
    }
    const double b = 1.0 / (1.0 + 2.0 / 0.16);
    const double expect_mean = b * (0.3 / 0.16);
    const double mu_mean = mu_sum / sweeps;
    const double mu_var = mu_sq / sweeps - mu_mean * mu_mean;
    CHECK(std::abs(mu_mean - expect_mean) < 4.0 * std::sqrt(b / sweeps));
    CHECK(std::abs(mu_var - b) < 4.0 * std::sqrt(2.0 * b * b / sweeps));
}

TEST_CASE("update_theta rejects misaligned state") {
    DataMatrix data(2, 1);
    data(0, 0) = 0.1;
    data(1, 0) = 0.2;
    Hyperparams h = Hyperparams::defaults_for(data);
    HspState st;
    st.c = Partition::singletons_merged(1);
    st.zeta = Permutation::identity(1);
    st.pi = {Partition::singletons_merged(2)};
    st.delta = {Permutation::identity(2)};
    st.theta = {{ClusterParams{}, ClusterParams{}}}; // two thetas, one cluster
    Rng rng(1);
    CHECK_THROWS_AS(update_theta(st, data, h, false, rng), InternalError);
}

TEST_CASE("hyperparameter validation") {
    DataMatrix data(3, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) data(i, j) = i + j;
    Hyperparams h = Hyperparams::defaults_for(data);
    CHECK_NOTHROW(h.validate(3, 2));
    h.d0[0] = 1.0; // prior variance mean would be infinite
    CHECK_THROWS_AS(h.validate(3, 2), std::invalid_argument);
    h = Hyperparams::defaults_for(data);
    h.tau = -0.1;
    CHECK_THROWS_AS(h.validate(3, 2), std::invalid_argument);
    h = Hyperparams::defaults_for(data);
    h.beta = 0.0;
    CHECK_THROWS_AS(h.validate(3, 2), std::invalid_argument);
}
