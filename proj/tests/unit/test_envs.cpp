#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qexp/envs.hpp"
#include "qexp/samplers.hpp"

using namespace qexp;

TEST(Envs, Factory) {
    for (const auto& name : env_names()) EXPECT_EQ(make_env(name)->name(), name);
    EXPECT_THROW(make_env("cartpole"), std::invalid_argument);
    EXPECT_EQ(make_env("pendulum")->observation_dim(), 3);
    EXPECT_EQ(make_env("acrobot_continuous")->observation_dim(), 6);
    EXPECT_EQ(make_env("mountain_car_cost")->action_high()[0], 1.0);
    EXPECT_EQ(make_env("pendulum")->action_high()[0], 2.0);
}

TEST(Envs, MountainCarCostsOnePerStep) {
    auto env = make_env("mountain_car_cost");
    Rng rng(1);
    env->reset(rng);
    for (int i = 0; i < 50; ++i) {
        const auto r = env->step(std::vector<double>{rng.uniform(-1, 1)});
        EXPECT_EQ(r.reward, -1.0);
        EXPECT_FALSE(r.terminated);
    }
}

TEST(Envs, MountainCarReachesGoalWithBangBang) {
    auto env = make_env("mountain_car_cost");
    Rng rng(2);
    env->reset(rng);
    double ret = 0.0;
    bool done = false;
    while (!done) {
        const double v = env->state()[1];
        const auto r = env->step(std::vector<double>{v >= 0.0 ? 1.0 : -1.0});
        ret += r.reward;
        done = r.terminated || r.truncated;
        if (r.terminated) {
            EXPECT_GE(env->state()[0], 0.45);
        }
    }
    EXPECT_GT(ret, -1000.0);
    EXPECT_LE(ret, -1.0);
}

TEST(Envs, PendulumRewardFormula) {
    EXPECT_EQ(pendulum_reward(0.0, 0.0, 0.0), 0.0);
    EXPECT_NEAR(pendulum_reward(0.5, 2.0, 1.5), -(0.25 + 0.4 + 0.00225), 1e-15);
    EXPECT_NEAR(pendulum_reward(2.0 * std::numbers::pi + 0.1, 0.0, 0.0), -0.01, 1e-12);

    auto env = make_env("pendulum");
    Rng rng(3);
    env->reset(rng);
    for (int i = 0; i < 100; ++i) {
        const auto s = env->state();
        const double a = rng.uniform(-3.0, 3.0);
        const auto r = env->step(std::vector<double>{a});
        EXPECT_DOUBLE_EQ(r.reward, pendulum_reward(s[0], s[1], std::clamp(a, -2.0, 2.0)));
        EXPECT_FALSE(r.terminated);
    }
}

TEST(Envs, PendulumAtRestUprightStaysPut) {
    auto env = make_env("pendulum");
    Rng rng(4);
    env->reset(rng);
    env->set_state({0.0, 0.0});
    const auto r = env->step(std::vector<double>{0.0});
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_EQ(env->state()[0], 0.0);
}

TEST(Envs, EpisodesTruncateAtLimit) {
    for (const auto& name : env_names()) {
        auto env = make_env(name);
        Rng rng(5);
        env->reset(rng);
        int steps = 0;
        StepResult r;
        do {
            r = env->step(std::vector<double>{0.0});
            ++steps;
        } while (!r.terminated && !r.truncated);
        EXPECT_LE(steps, kMaxEpisodeSteps);
        if (r.truncated) {
            EXPECT_EQ(steps, kMaxEpisodeSteps);
        }
        EXPECT_THROW(env->step(std::vector<double>{0.0}), std::logic_error);
    }
}

TEST(Envs, SameSeedSameTrajectory) {
    for (const auto& name : env_names()) {
        auto run = [&] {
            auto env = make_env(name);
            Rng rng(6);
            std::vector<double> trace = env->reset(rng);
            for (int i = 0; i < 300; ++i) {
                const auto r = env->step(std::vector<double>{std::sin(0.1 * i)});
                trace.insert(trace.end(), r.observation.begin(), r.observation.end());
                trace.push_back(r.reward);
                if (r.terminated || r.truncated) break;
            }
            return trace;
        };
        EXPECT_EQ(run(), run()) << name;
    }
}

TEST(Envs, AcrobotTerminatesWhenTipIsHigh) {
    auto env = make_env("acrobot_continuous");
    Rng rng(7);
    env->reset(rng);
    env->set_state({std::numbers::pi, 0.0, 0.0, 0.0});
    const auto r = env->step(std::vector<double>{0.0});
    EXPECT_TRUE(r.terminated);
    EXPECT_EQ(r.reward, -1.0);
}

TEST(Envs, ActionsAreClipped) {
    auto a = make_env("pendulum");
    auto b = make_env("pendulum");
    Rng r1(8), r2(8);
    a->reset(r1);
    b->reset(r2);
    const auto x = a->step(std::vector<double>{50.0});
    const auto y = b->step(std::vector<double>{2.0});
    EXPECT_EQ(x.observation, y.observation);
    EXPECT_EQ(x.reward, y.reward);
}
