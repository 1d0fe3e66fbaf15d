#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qexp/dataset.hpp"
#include "qexp/envs.hpp"
#include "qexp/samplers.hpp"

using namespace qexp;

namespace {

Transition make_transition(double k) {
    Transition t;
    t.state = {k, k + 1};
    t.action = {-k};
    t.reward = 0.5 * k;
    t.next_state = {k + 2, k + 3};
    t.terminated = static_cast<int>(k) % 2 == 0;
    t.behavior_log_prob = -k;
    return t;
}

} // namespace

TEST(Replay, RingBufferOverwritesOldest) {
    ReplayBuffer buf(3, 2, 1);
    for (int k = 0; k < 5; ++k) buf.add(make_transition(k));
    EXPECT_EQ(buf.size(), 3u);
    EXPECT_EQ(buf.at(0), make_transition(3));
    EXPECT_EQ(buf.at(1), make_transition(4));
    EXPECT_EQ(buf.at(2), make_transition(2));
}

TEST(Replay, RejectsBadTransitions) {
    ReplayBuffer buf(3, 2, 1);
    auto t = make_transition(1);
    t.action = {1, 2};
    EXPECT_THROW(buf.add(t), std::invalid_argument);
    t = make_transition(1);
    t.reward = std::nan("");
    EXPECT_THROW(buf.add(t), std::invalid_argument);
}

TEST(Replay, SamplingNeedsEnoughData) {
    ReplayBuffer buf(10, 2, 1);
    Rng rng(1);
    buf.add(make_transition(1));
    EXPECT_THROW(buf.sample(2, rng), InsufficientDataError);
    buf.add(make_transition(2));
    const auto b = buf.sample(2, rng);
    EXPECT_EQ(b.size(), 2u);
}

TEST(Replay, SamplingIsUniform) {
    ReplayBuffer buf(4, 2, 1);
    for (int k = 0; k < 4; ++k) buf.add(make_transition(k));
    Rng rng(2);
    std::vector<double> counts(4, 0.0);
    for (int i = 0; i < 10000; ++i) {
        const auto b = buf.sample(4, rng);
        for (double r : b.rewards) counts[static_cast<std::size_t>(r * 2.0)] += 1.0;
    }
    for (double c : counts) EXPECT_NEAR(c, 10000.0, 400.0);
}

TEST(Dataset, EmptyRoundTrip) {
    Dataset d{"pendulum", 3, 1, {}};
    std::stringstream ss;
    write_dataset(ss, d);
    const auto back = read_dataset(ss);
    EXPECT_EQ(back.env_name, "pendulum");
    EXPECT_TRUE(back.transitions.empty());
}

TEST(Dataset, RoundTripIsBitwise) {
    Dataset d{"toy", 2, 1, {}};
    for (int k = 0; k < 20; ++k) d.transitions.push_back(make_transition(k * 0.37));
    d.transitions[3].behavior_log_prob = std::nan("");
    std::stringstream ss;
    write_dataset(ss, d);
    const auto back = read_dataset(ss);
    ASSERT_EQ(back.transitions.size(), d.transitions.size());
    for (std::size_t i = 0; i < d.transitions.size(); ++i) {
        const auto& a = d.transitions[i];
        const auto& b = back.transitions[i];
        EXPECT_EQ(a.state, b.state);
        EXPECT_EQ(a.action, b.action);
        EXPECT_EQ(a.reward, b.reward);
        EXPECT_EQ(a.terminated, b.terminated);
        if (std::isnan(a.behavior_log_prob)) {
            EXPECT_TRUE(std::isnan(b.behavior_log_prob));
        } else {
            EXPECT_EQ(a.behavior_log_prob, b.behavior_log_prob);
        }
    }
}

TEST(Dataset, RejectsCorruptInput) {
    std::stringstream bad("QXDS");
    EXPECT_THROW(read_dataset(bad), std::runtime_error);
    Dataset d{"toy", 2, 1, {make_transition(1)}};
    std::stringstream ss;
    write_dataset(ss, d);
    std::string bytes = ss.str();
    bytes[4] = 9;  // version
    std::stringstream wrong(bytes);
    EXPECT_THROW(read_dataset(wrong), std::runtime_error);
    std::stringstream truncated(ss.str().substr(0, ss.str().size() - 4));
    EXPECT_THROW(read_dataset(truncated), std::runtime_error);
}

TEST(Dataset, UniformPendulumRewardsRecompute) {
    auto env = make_env("pendulum");
    Rng rng(3);
    const BehaviorPolicy uniform = [](std::span<const double>, Rng& r) {
        return std::make_pair(std::vector<double>{r.uniform(-2.0, 2.0)}, -std::log(4.0));
    };
    const auto d = generate_offline_dataset(*env, uniform, 2500, rng);
    ASSERT_EQ(d.transitions.size(), 2500u);
    for (const auto& t : d.transitions) {
        const double theta = std::atan2(t.state[1], t.state[0]);
        const double theta_dot = 8.0 * t.state[2];
        EXPECT_NEAR(t.reward, pendulum_reward(theta, theta_dot, t.action[0]), 1e-9);
        EXPECT_EQ(t.behavior_log_prob, -std::log(4.0));
    }
}

TEST(Dataset, GenerationIsDeterministic) {
    const BehaviorPolicy uniform = [](std::span<const double>, Rng& r) {
        return std::make_pair(std::vector<double>{r.uniform(-1.0, 1.0)}, -std::log(2.0));
    };
    auto gen = [&] {
        auto env = make_env("mountain_car_cost");
        Rng rng(4);
        return generate_offline_dataset(*env, uniform, 1500, rng).transitions;
    };
    EXPECT_EQ(gen(), gen());
}
