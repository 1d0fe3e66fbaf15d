#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qexp/kernels.hpp"
#include "qexp/nn_core.hpp"
#include "qexp/oracles.hpp"
#include "qexp/samplers.hpp"

using namespace qexp;

namespace {

Batch random_batch(std::size_t rows, std::size_t cols, Rng& rng) {
    Batch b(rows, cols);
    for (auto& x : b.data) x = rng.uniform(-1.5, 1.5);
    return b;
}

double weighted_output(const Mlp& net, const Batch& in, const Batch& w) {
    const Batch out = mlp_forward(net, in);
    double s = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * w.data[i];
    return s;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
    }
    return worst;
}

} // namespace

TEST(NnCore, ZeroNetworkOutputsZero) {
    Mlp net({3, 4, 2});
    const auto y = mlp_forward(net, std::vector<double>{1.0, -2.0, 0.5});
    EXPECT_EQ(y, (std::vector<double>{0.0, 0.0}));
}

TEST(NnCore, SingleAffineLayer) {
    Mlp net({1, 1});
    net.params()[0] = 2.5;
    net.params()[1] = -0.5;
    EXPECT_DOUBLE_EQ(mlp_forward(net, std::vector<double>{3.0})[0], 7.0);
}

TEST(NnCore, RejectsWidthMismatch) {
    Mlp net({2, 1});
    EXPECT_THROW(mlp_forward(net, std::vector<double>{1.0}), std::invalid_argument);
    EXPECT_THROW(Mlp({3}), std::invalid_argument);
}

TEST(NnCore, BackpropMatchesFiniteDifferences) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::size_t> sizes{2, 8, 8, 2};
        if (trial % 2 == 1) sizes = {3, 5, 4};
        Mlp net = Mlp::initialized(sizes, rng);
        const Batch in = random_batch(3, sizes.front(), rng);
        const Batch w = random_batch(3, sizes.back(), rng);
        MlpTape tape;
        mlp_forward(net, in, &tape);
        std::vector<double> g(net.param_count(), 0.0);
        Batch gin;
        mlp_backward(net, tape, w, g, &gin);

        const std::vector<double> p0(net.params().begin(), net.params().end());
        const auto fd = oracles::finite_diff_gradient(
            [&](std::span<const double> p) {
                Mlp copy = net;
                std::copy(p.begin(), p.end(), copy.params().begin());
                return weighted_output(copy, in, w);
            },
            p0, 1e-6);
        EXPECT_LT(max_rel_error(g, fd), 1e-6);

        const auto fd_in = oracles::finite_diff_gradient(
            [&](std::span<const double> x) {
                Batch b = in;
                std::copy(x.begin(), x.end(), b.data.begin());
                return weighted_output(net, b, w);
            },
            in.data, 1e-6);
        EXPECT_LT(max_rel_error(gin.data, fd_in), 1e-6);
    }
}

TEST(NnCore, ZeroOutputGradientGivesZeroGradients) {
    Rng rng(2);
    Mlp net = Mlp::initialized({2, 6, 1}, rng);
    const Batch in = random_batch(4, 2, rng);
    MlpTape tape;
    mlp_forward(net, in, &tape);
    std::vector<double> g(net.param_count(), 0.0);
    mlp_backward(net, tape, Batch(4, 1), g);
    for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(NnCore, AdamFirstStepMagnitude) {
    std::vector<double> p{0.0};
    AdamState s(1, 0.1, 0.9, 0.999);
    adam_step(p, std::vector<double>{1.0}, s);
    EXPECT_NEAR(p[0], -0.1, 1e-8);
    EXPECT_EQ(s.step, 1u);
    std::vector<double> q{0.3};
    AdamState s2(1, 0.1, 0.9, 0.999);
    adam_step(q, std::vector<double>{0.0}, s2);
    EXPECT_DOUBLE_EQ(q[0], 0.3);
    EXPECT_THROW(adam_step(q, std::vector<double>{0.0, 1.0}, s2), std::invalid_argument);
}

TEST(NnCore, AdamMinimizesQuadratic) {
    std::vector<double> w{1.0};
    AdamState s(1, 0.01, 0.9, 0.999);
    for (int i = 0; i < 500; ++i) adam_step(w, std::vector<double>{2.0 * w[0]}, s);
    EXPECT_LT(std::abs(w[0]), 1e-3);
}

TEST(NnCore, AdamUpdateSignFollowsFirstMoment) {
    Rng rng(3);
    std::vector<double> p(20, 0.0);
    AdamState s(20, 1e-3, 0.9, 0.999);
    for (int step = 0; step < 5; ++step) {
        std::vector<double> g(20);
        for (auto& x : g) x = rng.uniform(-1, 1);
        const auto before = p;
        adam_step(p, g, s);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double delta = p[i] - before[i];
            if (s.m[i] != 0.0) {
                EXPECT_EQ(std::signbit(delta), !std::signbit(s.m[i]));
            }
        }
    }
}

TEST(NnCore, PolyakContraction) {
    Rng rng(4);
    Mlp online = Mlp::initialized({2, 4, 1}, rng);
    Mlp target = Mlp::initialized({2, 4, 1}, rng);
    auto distance = [&] {
        double d = 0.0;
        for (std::size_t i = 0; i < online.param_count(); ++i) {
            d += std::pow(online.params()[i] - target.params()[i], 2);
        }
        return std::sqrt(d);
    };
    const double initial = distance();
    for (int i = 0; i < 1000; ++i) polyak_update(target, online, 0.01);
    EXPECT_LE(distance() / initial, std::pow(0.99, 1000) + 1e-12);
    polyak_update(target, online, 1.0);
    EXPECT_EQ(target, online);
    EXPECT_THROW(polyak_update(target, Mlp({2, 1}), 0.5), std::invalid_argument);
}

TEST(NnCore, InitializationIsDeterministicAndBounded) {
    Rng a(5), b(5);
    const Mlp n1 = Mlp::initialized({4, 16, 2}, a);
    const Mlp n2 = Mlp::initialized({4, 16, 2}, b);
    EXPECT_EQ(n1, n2);
    for (std::size_t i = 0; i < 16 * 4; ++i) EXPECT_LE(std::abs(n1.params()[i]), 0.5);
}

TEST(NnCore, CheckpointRoundTrip) {
    Rng rng(6);
    const Mlp net = Mlp::initialized({3, 7, 2}, rng);
    std::stringstream ss;
    save_mlp(ss, net);
    EXPECT_EQ(load_mlp(ss), net);

    std::stringstream bad("not a checkpoint");
    EXPECT_THROW(load_mlp(bad), std::runtime_error);
    std::string bytes;
    {
        std::stringstream s2;
        save_mlp(s2, net);
        bytes = s2.str();
    }
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(load_mlp(truncated), std::runtime_error);
}

TEST(NnCore, ScalarAndVectorKernelsAgreeOnNetworks) {
    Rng rng(7);
    const Mlp net = Mlp::initialized({5, 33, 17, 3}, rng);
    const Batch in = random_batch(6, 5, rng);
    const auto original = kernels::active().backend;
    kernels::set_active(kernels::Backend::Scalar);
    const Batch ref = mlp_forward(net, in);
    kernels::set_active(original);
    const Batch fast = mlp_forward(net, in);
    for (std::size_t i = 0; i < ref.data.size(); ++i) EXPECT_NEAR(ref.data[i], fast.data[i], 1e-12);
}
