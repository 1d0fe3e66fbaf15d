#pragma once

// Classic-control environments with continuous actions.
//
//   mountain_car_cost   force in [-1, 1], reward -1 per step, terminates at
//                       position >= 0.45.
//   pendulum            torque in [-2, 2], reward -(theta^2 + 0.1 thetadot^2 +
//                       0.001 a^2) with theta wrapped to [-pi, pi]; never terminates.
//   acrobot_continuous  torque in [-1, 1] on the middle joint, reward -1 per
//                       step, terminates when the tip rises one link length
//                       above the pivot.
//
// Episodes truncate at kMaxEpisodeSteps. Actions are clipped to the bounds
// before the dynamics; rewards use the clipped action. Observations are
// rescaled to roughly unit range; state() exposes the physical state.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qexp {

class Rng;

inline constexpr int kMaxEpisodeSteps = 1000;

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
};

class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string_view name() const = 0;
    virtual int observation_dim() const = 0;
    int action_dim() const { return static_cast<int>(action_low_.size()); }
    const std::vector<double>& action_low() const { return action_low_; }
    const std::vector<double>& action_high() const { return action_high_; }

    /// Starts an episode; returns the first observation.
    std::vector<double> reset(Rng& rng);
    /// Throws std::logic_error after the episode ended or before reset().
    StepResult step(std::span<const double> action);

    const std::vector<double>& state() const { return state_; }
    /// Places the environment in a given physical state mid-episode.
    void set_state(std::vector<double> state, int steps = 0);
    int steps() const { return steps_; }
    std::vector<double> observation() const { return observe(); }

protected:
    Environment(std::vector<double> low, std::vector<double> high)
        : action_low_(std::move(low)), action_high_(std::move(high)) {}

    virtual std::vector<double> initial_state(Rng& rng) const = 0;
    /// Advances state_ under a clipped action; returns the reward.
    virtual double advance(std::span<const double> action, bool& terminated) = 0;
    virtual std::vector<double> observe() const = 0;

    std::vector<double> state_;

private:
    std::vector<double> action_low_;
    std::vector<double> action_high_;
    int steps_ = 0;
    bool done_ = true;
};

/// Throws std::invalid_argument for an unknown name.
std::unique_ptr<Environment> make_env(std::string_view name);
const std::vector<std::string>& env_names();

double angle_normalize(double x);
double pendulum_reward(double theta, double theta_dot, double torque);

} // namespace qexp
