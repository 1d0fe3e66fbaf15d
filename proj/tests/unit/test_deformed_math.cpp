#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qexp/deformed_math.hpp"
#include "qexp/samplers.hpp"

using qexp::EntropicIndex;

TEST(DeformedMath, ExpQClosedForms) {
    EXPECT_DOUBLE_EQ(qexp::exp_q(1.0, EntropicIndex(0.0)), 2.0);
    EXPECT_DOUBLE_EQ(qexp::exp_q(-1.0, EntropicIndex(0.0)), 0.0);
    EXPECT_DOUBLE_EQ(qexp::exp_q(-3.0, EntropicIndex(0.0)), 0.0);
    EXPECT_NEAR(qexp::exp_q(0.5, EntropicIndex(2.0)), 2.0, 1e-14);
    EXPECT_NEAR(qexp::exp_q(-1.0, EntropicIndex(2.0)), 0.5, 1e-14);
    EXPECT_NEAR(qexp::exp_q(0.3, EntropicIndex(0.5)), 1.15 * 1.15, 1e-14);
    EXPECT_DOUBLE_EQ(qexp::exp_q(0.7, EntropicIndex(1.0)), std::exp(0.7));
}

TEST(DeformedMath, ExpQHeavyPoleIsInfinite) {
    EXPECT_TRUE(std::isinf(qexp::exp_q(1.0, EntropicIndex(2.0))));
    EXPECT_TRUE(std::isinf(qexp::exp_q(5.0, EntropicIndex(2.0))));
}

TEST(DeformedMath, LnQClosedForms) {
    EXPECT_NEAR(qexp::ln_q(3.0, EntropicIndex(0.0)), 2.0, 1e-14);
    EXPECT_NEAR(qexp::ln_q(4.0, EntropicIndex(2.0)), 0.75, 1e-14);
    EXPECT_DOUBLE_EQ(qexp::ln_q(2.5, EntropicIndex(1.0)), std::log(2.5));
    EXPECT_THROW(qexp::ln_q(0.0, EntropicIndex(0.5)), std::domain_error);
    EXPECT_THROW(qexp::ln_q(-1.0, EntropicIndex(1.0)), std::domain_error);
}

TEST(DeformedMath, RoundTripsAcrossIndices) {
    qexp::Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const EntropicIndex q(rng.uniform(-1.0, 2.9));
        const double x = rng.uniform(0.05, 20.0);
        EXPECT_NEAR(qexp::exp_q(qexp::ln_q(x, q), q), x, 1e-10 * x) << "q=" << q.value();
    }
}

TEST(DeformedMath, ContinuityAtQOne) {
    for (double x = -5.0; x <= 5.0; x += 0.25) {
        for (double eps : {1e-6, -1e-6}) {
            const EntropicIndex q(1.0 + eps);
            EXPECT_NEAR(qexp::exp_q(x, q) / std::exp(x), 1.0, 1e-4) << x;
        }
    }
    EXPECT_NEAR(qexp::ln_q(3.0, EntropicIndex(1.0 + 1e-6)), std::log(3.0), 1e-5);
}

TEST(DeformedMath, BoxMullerIndexMap) {
    EXPECT_NEAR(qexp::gbmm_index_map(EntropicIndex(1.0)).value(), 1.0, 1e-15);
    EXPECT_NEAR(qexp::gbmm_index_map(EntropicIndex(0.0)).value(), -1.0, 1e-15);
    EXPECT_NEAR(qexp::gbmm_index_map(EntropicIndex(2.0)).value(), 5.0 / 3.0, 1e-15);
    for (double q = -0.9; q < 3.0; q += 0.137) {
        const auto back = qexp::gbmm_index_map(qexp::gbmm_index_inverse(EntropicIndex(q)));
        EXPECT_NEAR(back.value(), q, 1e-12);
    }
    EXPECT_THROW(qexp::gbmm_index_map(EntropicIndex(-1.0)), std::domain_error);
    EXPECT_THROW(qexp::gbmm_index_inverse(EntropicIndex(3.0)), std::domain_error);
}

TEST(DeformedMath, GammaFunctions) {
    EXPECT_NEAR(qexp::log_gamma(0.5), 0.5 * std::log(std::numbers::pi), 1e-14);
    EXPECT_NEAR(qexp::log_gamma(10.0), std::log(362880.0), 1e-12);
    EXPECT_NEAR(qexp::digamma(1.0), -std::numbers::egamma, 1e-14);
    EXPECT_NEAR(qexp::digamma(0.5), -std::numbers::egamma - 2.0 * std::numbers::ln2, 1e-14);
    // psi(x + 1) = psi(x) + 1/x
    for (double x = 0.1; x < 30.0; x += 0.7) {
        EXPECT_NEAR(qexp::digamma(x + 1.0) - qexp::digamma(x), 1.0 / x, 1e-10);
    }
    EXPECT_THROW(qexp::log_gamma(0.0), std::domain_error);
    EXPECT_THROW(qexp::digamma(-2.0), std::domain_error);
}

TEST(DeformedMath, EntropicIndexClassification) {
    EXPECT_TRUE(EntropicIndex(1.0 + 1e-13).is_exp_limit());
    EXPECT_TRUE(EntropicIndex(0.0).is_light());
    EXPECT_TRUE(EntropicIndex(2.0).is_heavy());
    EXPECT_FALSE(EntropicIndex(1.0).is_light());
}
