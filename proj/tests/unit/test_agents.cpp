#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qexp/agents.hpp"
#include "qexp/oracles.hpp"
#include "qexp/samplers.hpp"

using namespace qexp;

namespace {

PolicyHeadConfig head(PolicyFamily family, double q = 0.0, int dim = 1) {
    PolicyHeadConfig c;
    c.family = family;
    c.q = q;
    c.action_dim = dim;
    c.action_low.assign(dim, -2.0);
    c.action_high.assign(dim, 2.0);
    return c;
}

AgentConfig small_config(Algorithm algorithm, bool offline) {
    AgentConfig c;
    c.algorithm = algorithm;
    c.offline = offline;
    c.hidden = {8, 8};
    c.batch_size = 8;
    c.proposal_samples = 6;
    return c;
}

void fill(ReplayBuffer& buf, int state_dim, int action_dim, std::size_t n, Rng& rng, bool with_log_prob) {
    for (std::size_t i = 0; i < n; ++i) {
        Transition t;
        for (int d = 0; d < state_dim; ++d) {
            t.state.push_back(rng.uniform(-1, 1));
            t.next_state.push_back(rng.uniform(-1, 1));
        }
        for (int d = 0; d < action_dim; ++d) t.action.push_back(rng.uniform(-1.9, 1.9));
        t.reward = rng.uniform(-1, 0);
        t.terminated = rng.uniform() < 0.1;
        if (with_log_prob) t.behavior_log_prob = -std::log(4.0);
        buf.add(t);
    }
}

} // namespace

TEST(Agents, ParseNames) {
    for (auto a : {Algorithm::Sac, Algorithm::GreedyAc, Algorithm::Tawac, Algorithm::Awac, Algorithm::Iql,
                   Algorithm::Inac, Algorithm::Td3bc}) {
        EXPECT_EQ(parse_algorithm(algorithm_name(a)), a);
    }
    EXPECT_THROW(parse_algorithm("ppo"), std::invalid_argument);
}

TEST(Agents, TawacAtQPrimeOneIsAwac) {
    for (double adv = -5.0; adv <= 3.0; adv += 0.125) {
        for (double tau : {0.01, 0.1, 1.0}) {
            EXPECT_NEAR(tawac_weight(adv, tau, 1.0, 1e300), awac_weight(adv, tau, 1e300),
                        1e-12 * awac_weight(adv, tau, 1e300));
        }
    }
}

TEST(Agents, TawacAtQPrimeZeroTruncatesBadActions) {
    // exp_0(x) = max(0, 1 + x): weights vanish once A / tau <= -1.
    EXPECT_EQ(tawac_weight(-1.0, 1.0, 0.0, 100.0), 0.0);
    EXPECT_EQ(tawac_weight(-0.5, 0.1, 0.0, 100.0), 0.0);
    EXPECT_DOUBLE_EQ(tawac_weight(-0.5, 1.0, 0.0, 100.0), 0.5);
    EXPECT_DOUBLE_EQ(tawac_weight(2.0, 1.0, 0.0, 100.0), 3.0);
    EXPECT_GT(awac_weight(-10.0, 1.0, 100.0), 0.0);
}

TEST(Agents, WeightsAreCapped) {
    EXPECT_EQ(awac_weight(50.0, 0.1, 20.0), 20.0);
    EXPECT_EQ(tawac_weight(50.0, 0.1, 0.0, 20.0), 20.0);
    EXPECT_EQ(inac_weight(50.0, 0.1, -1.0, 20.0), 20.0);
}

TEST(Agents, InacNeedsBehaviorLogProb) {
    EXPECT_THROW(inac_weight(0.1, 1.0, std::nan(""), 100.0), std::invalid_argument);
    EXPECT_DOUBLE_EQ(inac_weight(1.0, 1.0, std::log(0.5), 100.0), std::exp(1.0) * 2.0);
}

TEST(Agents, TopKKeepsLargestWithLowIndexTies) {
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0, 3.0};
    EXPECT_EQ(top_k_indices(v, 0.4), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(top_k_indices(v, 0.5), (std::vector<std::size_t>{0, 2, 4}));
    EXPECT_EQ(top_k_indices(v, 1e-6), (std::vector<std::size_t>{0}));
    EXPECT_EQ(top_k_indices(v, 1.0).size(), 5u);
    EXPECT_THROW(top_k_indices(v, 0.0), std::invalid_argument);
}

TEST(Agents, TwinMin) {
    EXPECT_EQ(twin_min(1.0, -2.0), -2.0);
}

TEST(Agents, StateActionInputClipsActions) {
    const auto h = head(PolicyFamily::Gaussian);
    Batch s(2, 1), a(2, 1);
    s(0, 0) = 0.5;
    a(0, 0) = 7.0;
    a(1, 0) = -7.0;
    const Batch x = state_action_input(s, a, h);
    EXPECT_EQ(x.cols, 2u);
    EXPECT_EQ(x(0, 1), 2.0);
    EXPECT_EQ(x(1, 1), -2.0);
}

TEST(Agents, WeightedLikelihoodGradientMatchesFiniteDifferences) {
    Rng rng(3);
    for (auto fam : {PolicyFamily::Gaussian, PolicyFamily::StudentT, PolicyFamily::Beta, PolicyFamily::QGaussian}) {
        const auto h = head(fam, 0.0, 2);
        Actor actor(h, 3, {5}, rng);
        Batch states(4, 3), actions(4, 2);
        for (double& v : states.data) v = rng.uniform(-1, 1);
        const auto outs = actor.forward(states);
        for (std::size_t r = 0; r < 4; ++r) {
            const auto mean = policy_mean_action(h, outs[r]);
            const auto draw = policy_sample(h, outs[r], rng);
            for (int d = 0; d < 2; ++d) actions(r, d) = mean[d] + 0.5 * (draw[d] - mean[d]);
        }
        const std::vector<double> w{0.5, 1.0, 0.0, 2.0};
        Rng r0(1);
        const auto loss = weighted_likelihood_loss(actor, states, actions, w, r0);
        std::vector<double> p0(actor.net().params().begin(), actor.net().params().end());
        const auto fd = oracles::finite_diff_gradient(
            [&](std::span<const double> p) {
                Actor probe = actor;
                std::copy(p.begin(), p.end(), probe.net().params().begin());
                Rng r1(1);
                return weighted_likelihood_loss(probe, states, actions, w, r1).loss;
            },
            p0);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            ASSERT_NEAR(loss.gradient[i], fd[i], 1e-6 * std::max(1.0, std::abs(fd[i])))
                << policy_family_name(fam) << " param " << i;
        }
    }
}

TEST(Agents, OutOfSupportActionIsReplaced) {
    Rng rng(4);
    const auto h = head(PolicyFamily::QGaussian, 0.0, 1);
    Actor actor(h, 2, {4}, rng);
    Batch states(3, 2), actions(3, 1);
    for (double& v : states.data) v = rng.uniform(-1, 1);
    for (std::size_t r = 0; r < 3; ++r) actions(r, 0) = 1e6;
    const std::vector<double> w{1.0, 1.0, 1.0};
    const auto loss = weighted_likelihood_loss(actor, states, actions, w, rng);
    EXPECT_EQ(loss.replaced_fraction, 1.0);
    EXPECT_TRUE(std::isfinite(loss.loss));
}

TEST(Agents, TdRegressionLearnsChainValues) {
    // s0 -> s1 -> s2 -> end with reward -1: V = -2.9701, -1.99, -1.
    Rng rng(5);
    Mlp net = Mlp::initialized({3, 16, 1}, rng);
    Mlp target = net;
    AdamState opt(net.param_count(), 5e-3, 0.9, 0.999);
    Batch x(3, 3);
    for (int i = 0; i < 3; ++i) x(i, i) = 1.0;
    for (int step = 0; step < 3000; ++step) {
        const Batch next = mlp_forward(target, x);
        const std::vector<double> y{-1.0 + 0.99 * next(1, 0), -1.0 + 0.99 * next(2, 0), -1.0};
        regression_step(net, opt, x, y);
        polyak_update(target, net, 0.05);
    }
    const Batch q = mlp_forward(net, x);
    EXPECT_NEAR(q(0, 0), -2.9701, 1e-2);
    EXPECT_NEAR(q(1, 0), -1.99, 1e-2);
    EXPECT_NEAR(q(2, 0), -1.0, 1e-2);
}

TEST(Agents, ExpectileRegressionFitsUpperExpectile) {
    // Constant input, targets {0, 1}: the tau-expectile of a two-point
    // distribution solves tau (1 - m) = (1 - tau) m, so m = tau.
    Rng rng(6);
    Mlp net = Mlp::initialized({1, 1}, rng);
    AdamState opt(net.param_count(), 1e-2, 0.9, 0.999);
    Batch x(2, 1);
    x(0, 0) = x(1, 0) = 1.0;
    for (int i = 0; i < 5000; ++i) regression_step(net, opt, x, std::vector<double>{0.0, 1.0}, 0.7);
    EXPECT_NEAR(mlp_forward(net, x)(0, 0), 0.7, 1e-3);
}

TEST(Agents, EveryAlgorithmUpdatesDeterministically) {
    const std::vector<std::pair<Algorithm, bool>> cases = {
        {Algorithm::Sac, false},  {Algorithm::GreedyAc, false}, {Algorithm::Tawac, false}, {Algorithm::Awac, false},
        {Algorithm::Tawac, true}, {Algorithm::Awac, true},      {Algorithm::Iql, true},    {Algorithm::Inac, true},
        {Algorithm::Td3bc, true},
    };
    for (const auto& [alg, offline] : cases) {
        if (offline ? !supports_offline(alg) : !supports_online(alg)) continue;
        const auto cfg = small_config(alg, offline);
        std::vector<double> params[2];
        for (int run = 0; run < 2; ++run) {
            Rng init(11), data(12), upd(13);
            auto agent = make_agent(cfg, head(PolicyFamily::Gaussian), 3, 100, init);
            fill(agent->buffer(), 3, 1, 64, data, true);
            for (int i = 0; i < 20; ++i) {
                const auto stats = agent->update(upd);
                ASSERT_TRUE(std::isfinite(stats.critic_loss)) << algorithm_name(alg);
                ASSERT_TRUE(std::isfinite(stats.actor_loss)) << algorithm_name(alg);
            }
            const auto p = agent->actor().net().params();
            params[run].assign(p.begin(), p.end());
        }
        EXPECT_EQ(params[0], params[1]) << algorithm_name(alg);
    }
}

TEST(Agents, UpdateNeedsABatch) {
    Rng rng(7);
    auto agent = make_agent(small_config(Algorithm::Sac, false), head(PolicyFamily::Gaussian), 3, 100, rng);
    fill(agent->buffer(), 3, 1, 4, rng, false);
    EXPECT_THROW(agent->update(rng), InsufficientDataError);
}

TEST(Agents, OfflineInacRejectsDataWithoutLogProbs) {
    Rng rng(8);
    auto agent = make_agent(small_config(Algorithm::Inac, true), head(PolicyFamily::Gaussian), 3, 100, rng);
    fill(agent->buffer(), 3, 1, 32, rng, false);
    EXPECT_THROW(agent->update(rng), std::invalid_argument);
}

TEST(Agents, ZeroWeightFractionReportedForTawacZero) {
    Rng rng(9);
    auto cfg = small_config(Algorithm::Tawac, true);
    cfg.q_prime = 0.0;
    cfg.tau = 0.01;
    auto agent = make_agent(cfg, head(PolicyFamily::Gaussian), 3, 100, rng);
    fill(agent->buffer(), 3, 1, 64, rng, false);
    double zero = 0.0;
    for (int i = 0; i < 20; ++i) zero += agent->update(rng).zero_weight_fraction;
    EXPECT_GT(zero, 0.0);
}

TEST(Agents, ActorCheckpointRoundTrip) {
    Rng rng(10);
    auto h = head(PolicyFamily::StudentT, 0.0, 2);
    h.nu_base = 2.5;
    Actor actor(h, 4, {6, 5}, rng);
    std::stringstream ss;
    save_actor(ss, actor);
    const Actor back = load_actor(ss);
    EXPECT_EQ(back.net(), actor.net());
    EXPECT_EQ(back.head().family, h.family);
    EXPECT_EQ(back.head().nu_base, 2.5);
    EXPECT_EQ(back.head().action_low, h.action_low);

    std::string bytes = ss.str();
    for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
        std::stringstream bad(bytes.substr(0, cut));
        EXPECT_THROW(load_actor(bad), std::runtime_error) << cut;
    }
    bytes[9] ^= 0x7f;
    std::stringstream bad_version(bytes);
    EXPECT_THROW(load_actor(bad_version), std::runtime_error);
}
