#include "qexp/envs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qexp/samplers.hpp"

namespace qexp {

namespace {

constexpr double kPi = std::numbers::pi;

class MountainCarCost final : public Environment {
public:
    MountainCarCost() : Environment({-1.0}, {1.0}) {}
    std::string_view name() const override { return "mountain_car_cost"; }
    int observation_dim() const override { return 2; }

protected:
    static constexpr double kMinPosition = -1.2;
    static constexpr double kMaxPosition = 0.6;
    static constexpr double kMaxSpeed = 0.07;
    static constexpr double kGoalPosition = 0.45;
    static constexpr double kPower = 0.0015;

    std::vector<double> initial_state(Rng& rng) const override { return {rng.uniform(-0.6, -0.4), 0.0}; }

    double advance(std::span<const double> action, bool& terminated) override {
        double position = state_[0];
        double velocity = state_[1];
        velocity += action[0] * kPower - 0.0025 * std::cos(3.0 * position);
        velocity = std::clamp(velocity, -kMaxSpeed, kMaxSpeed);
        position = std::clamp(position + velocity, kMinPosition, kMaxPosition);
        if (position == kMinPosition && velocity < 0.0) velocity = 0.0;
        state_ = {position, velocity};
        terminated = position >= kGoalPosition;
        return -1.0;
    }

    std::vector<double> observe() const override {
        const double mid = 0.5 * (kMinPosition + kMaxPosition);
        const double half = 0.5 * (kMaxPosition - kMinPosition);
        return {(state_[0] - mid) / half, state_[1] / kMaxSpeed};
    }
};

class Pendulum final : public Environment {
public:
    Pendulum() : Environment({-2.0}, {2.0}) {}
    std::string_view name() const override { return "pendulum"; }
    int observation_dim() const override { return 3; }

protected:
    static constexpr double kMaxSpeed = 8.0;
    static constexpr double kDt = 0.05;
    static constexpr double kGravity = 10.0;
    static constexpr double kMass = 1.0;
    static constexpr double kLength = 1.0;

    std::vector<double> initial_state(Rng& rng) const override {
        return {rng.uniform(-kPi, kPi), rng.uniform(-1.0, 1.0)};
    }

    double advance(std::span<const double> action, bool& terminated) override {
        const double th = state_[0];
        const double thdot = state_[1];
        const double u = action[0];
        const double reward = pendulum_reward(th, thdot, u);
        double newthdot =
            thdot + (3.0 * kGravity / (2.0 * kLength) * std::sin(th) + 3.0 / (kMass * kLength * kLength) * u) * kDt;
        newthdot = std::clamp(newthdot, -kMaxSpeed, kMaxSpeed);
        state_ = {th + newthdot * kDt, newthdot};
        terminated = false;
        return reward;
    }

    std::vector<double> observe() const override {
        return {std::cos(state_[0]), std::sin(state_[0]), state_[1] / kMaxSpeed};
    }
};

class AcrobotContinuous final : public Environment {
public:
    AcrobotContinuous() : Environment({-1.0}, {1.0}) {}
    std::string_view name() const override { return "acrobot_continuous"; }
    int observation_dim() const override { return 6; }

protected:
    static constexpr double kDt = 0.2;
    static constexpr double kLink1Length = 1.0;
    static constexpr double kLink1Mass = 1.0;
    static constexpr double kLink2Mass = 1.0;
    static constexpr double kLink1Com = 0.5;
    static constexpr double kLink2Com = 0.5;
    static constexpr double kLinkMoi = 1.0;
    static constexpr double kMaxVel1 = 4.0 * kPi;
    static constexpr double kMaxVel2 = 9.0 * kPi;
    static constexpr double kGravity = 9.8;

    using State = std::array<double, 4>;

    static State derivatives(const State& s, double torque) {
        const double m1 = kLink1Mass, m2 = kLink2Mass, l1 = kLink1Length;
        const double lc1 = kLink1Com, lc2 = kLink2Com, i1 = kLinkMoi, i2 = kLinkMoi, g = kGravity;
        const double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];
        const double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
        const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
        const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - kPi / 2.0);
        const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                            2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                            (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - kPi / 2.0) + phi2;
        const double ddtheta2 =
            (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
            (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
        const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
        return {dtheta1, dtheta2, ddtheta1, ddtheta2};
    }

    static double wrap(double x) {
        const double two_pi = 2.0 * kPi;
        while (x > kPi) x -= two_pi;
        while (x < -kPi) x += two_pi;
        return x;
    }

    std::vector<double> initial_state(Rng& rng) const override {
        std::vector<double> s(4);
        for (double& v : s) v = rng.uniform(-0.1, 0.1);
        return s;
    }

    double advance(std::span<const double> action, bool& terminated) override {
        const double torque = action[0];
        State s{state_[0], state_[1], state_[2], state_[3]};
        auto add = [](const State& a, const State& b, double h) {
            return State{a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]};
        };
        const State k1 = derivatives(s, torque);
        const State k2 = derivatives(add(s, k1, kDt / 2.0), torque);
        const State k3 = derivatives(add(s, k2, kDt / 2.0), torque);
        const State k4 = derivatives(add(s, k3, kDt), torque);
        for (std::size_t i = 0; i < 4; ++i) s[i] += kDt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        state_ = {wrap(s[0]), wrap(s[1]), std::clamp(s[2], -kMaxVel1, kMaxVel1),
                  std::clamp(s[3], -kMaxVel2, kMaxVel2)};
        terminated = -std::cos(state_[0]) - std::cos(state_[1] + state_[0]) > 1.0;
        return -1.0;
    }

    std::vector<double> observe() const override {
        return {std::cos(state_[0]), std::sin(state_[0]), std::cos(state_[1]),
                std::sin(state_[1]), state_[2] / kMaxVel1,   state_[3] / kMaxVel2};
    }
};

} // namespace

std::vector<double> Environment::reset(Rng& rng) {
    state_ = initial_state(rng);
    steps_ = 0;
    done_ = false;
    return observe();
}

StepResult Environment::step(std::span<const double> action) {
    if (done_) {
        throw std::logic_error("Environment::step called on a finished episode");
    }
    if (action.size() != action_low_.size()) {
        throw std::invalid_argument("Environment::step: action dimension mismatch");
    }
    std::vector<double> clipped(action.size());
    for (std::size_t i = 0; i < action.size(); ++i) {
        // NaN actions clip to the lower bound.
        clipped[i] = std::isnan(action[i]) ? action_low_[i] : std::clamp(action[i], action_low_[i], action_high_[i]);
    }
    StepResult result;
    result.reward = advance(clipped, result.terminated);
    ++steps_;
    result.truncated = !result.terminated && steps_ >= kMaxEpisodeSteps;
    done_ = result.terminated || result.truncated;
    result.observation = observe();
    return result;
}

void Environment::set_state(std::vector<double> state, int steps) {
    if (steps < 0 || steps >= kMaxEpisodeSteps) {
        throw std::invalid_argument("Environment::set_state: step count out of range");
    }
    state_ = std::move(state);
    steps_ = steps;
    done_ = false;
}

std::unique_ptr<Environment> make_env(std::string_view name) {
    if (name == "mountain_car_cost") return std::make_unique<MountainCarCost>();
    if (name == "pendulum") return std::make_unique<Pendulum>();
    if (name == "acrobot_continuous") return std::make_unique<AcrobotContinuous>();
    throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

const std::vector<std::string>& env_names() {
    static const std::vector<std::string> names{"mountain_car_cost", "pendulum", "acrobot_continuous"};
    return names;
}

double angle_normalize(double x) {
    const double two_pi = 2.0 * kPi;
    double r = std::fmod(x + kPi, two_pi);
    if (r < 0.0) r += two_pi;
    return r - kPi;
}

double pendulum_reward(double theta, double theta_dot, double torque) {
    const double th = angle_normalize(theta);
    return -(th * th + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque);
}

} // namespace qexp
