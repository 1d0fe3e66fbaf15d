#include <gtest/gtest.h>

#include <boost/math/distributions/cauchy.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "qexp/oracles.hpp"
#include "qexp/samplers.hpp"

using namespace qexp;

TEST(Oracles, QuadratureBasics) {
    const auto one = oracles::integrate_adaptive({[](double) { return 1.0; }, 0.0, 1.0, 1e-12, 20});
    EXPECT_TRUE(one.converged);
    EXPECT_NEAR(one.value, 1.0, 1e-12);
    const auto normal = oracles::integrate_adaptive(
        {[](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }, -8.0, 8.0, 1e-8, 20});
    EXPECT_NEAR(normal.value, 1.0, 1e-8);
    const auto inf = std::numeric_limits<double>::infinity();
    const auto cauchy = oracles::integrate_adaptive(
        {[](double x) { return 1.0 / (std::numbers::pi * (1.0 + x * x)); }, -inf, inf, 1e-8, 20});
    EXPECT_NEAR(cauchy.value, 1.0, 1e-8);
    EXPECT_THROW(oracles::integrate_adaptive({[](double) { return 1.0; }, 0.0, 1.0, 0.0, 20}), std::invalid_argument);
}

TEST(Oracles, FiniteDifferenceOrder) {
    const auto g = oracles::finite_diff_gradient([](std::span<const double> x) { return x[0] * x[0]; },
                                                 std::vector<double>{3.0}, 1e-4);
    EXPECT_NEAR(g[0], 6.0, 1e-6);
    auto err = [](double h) {
        const auto d = oracles::finite_diff_gradient([](std::span<const double> x) { return std::sin(x[0]); },
                                                     std::vector<double>{0.7}, h);
        return std::abs(d[0] - std::cos(0.7));
    };
    EXPECT_NEAR(err(1e-2) / err(5e-3), 4.0, 0.05);
    EXPECT_THROW(oracles::finite_diff_gradient([](std::span<const double> x) { return std::log(x[0]); },
                                               std::vector<double>{0.0}, 1e-3),
                 std::domain_error);
}

TEST(Oracles, SimplexProjection) {
    const auto p = oracles::project_simplex_bruteforce(std::vector<double>{2.0, 0.0});
    EXPECT_EQ(p, (std::vector<double>{1.0, 0.0}));
    const std::vector<double> on{0.2, 0.5, 0.3};
    const auto same = oracles::project_simplex_bruteforce(on);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(same[i], on[i], 1e-15);
    EXPECT_THROW(oracles::project_simplex_bruteforce(std::vector<double>(13, 0.0)), std::invalid_argument);
}

TEST(Oracles, KsHasPower) {
    Rng rng(1);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = rng.normal();
    const boost::math::normal n01;
    const boost::math::cauchy c01;
    const auto good = oracles::ks_test(xs, [&](double x) { return boost::math::cdf(n01, x); });
    const auto bad = oracles::ks_test(xs, [&](double x) { return boost::math::cdf(c01, x); });
    EXPECT_TRUE(good.pass);
    EXPECT_FALSE(bad.pass);
    const auto again = oracles::ks_test(xs, [&](double x) { return boost::math::cdf(n01, x); });
    EXPECT_EQ(good.statistic, again.statistic);
    EXPECT_THROW(oracles::ks_test(std::vector<double>(10, 0.0), [](double) { return 0.5; }), std::invalid_argument);
}

TEST(Oracles, KsFromDensityMatchesExactCdf) {
    Rng rng(2);
    std::vector<double> xs(5000);
    for (auto& x : xs) x = rng.normal();
    const boost::math::normal n01;
    const auto exact = oracles::ks_test(xs, [&](double x) { return boost::math::cdf(n01, x); });
    const auto quad = oracles::ks_test_density(
        xs, [&](double x) { return boost::math::pdf(n01, x); }, -std::numeric_limits<double>::infinity());
    EXPECT_NEAR(exact.statistic, quad.statistic, 1e-9);
}

TEST(Oracles, ChiSquareHasPower) {
    Rng rng(3);
    std::vector<double> xs(50000);
    for (auto& x : xs) x = rng.normal();
    const boost::math::normal n01;
    const boost::math::normal wide(0.0, 1.2);
    EXPECT_TRUE(oracles::chi2_test(xs, [&](double x) { return boost::math::pdf(n01, x); }, -4, 4, 20).pass);
    EXPECT_FALSE(oracles::chi2_test(xs, [&](double x) { return boost::math::pdf(wide, x); }, -4, 4, 20).pass);
}

TEST(Oracles, MonteCarloNormalization) {
    Rng rng(4);
    // Uniform density on the unit square against a 2-D standard normal proposal.
    const auto value = oracles::monte_carlo_normalization(
        [](std::span<const double> x) {
            return (std::abs(x[0]) < 0.5 && std::abs(x[1]) < 0.5) ? 1.0 : 0.0;
        },
        [](Rng& r) { return std::vector<double>{r.normal(), r.normal()}; },
        [](std::span<const double> x) { return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])) / (2.0 * std::numbers::pi); },
        200000, rng);
    EXPECT_NEAR(value, 1.0, 2e-2);
}
