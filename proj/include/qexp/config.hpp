#pragma once

// Experiment configuration: an INI file with [experiment], [policy],
// [agent], [dataset] and [sweep] sections. Unknown sections or keys are
// rejected so a typo cannot silently fall back to a default.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qexp/agents.hpp"
#include "qexp/policy_heads.hpp"

namespace qexp {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Best-run protocol: evaluate every 1000 steps for one episode. Sweep
/// protocol: every 10000 steps, averaged over three episodes.
enum class EvalProtocol { Best, Sweep };

struct SweepSpec {
    std::vector<double> critic_lrs{1e-2, 1e-3, 1e-4, 1e-5};
    std::vector<double> actor_lr_multipliers{0.1, 1.0, 10.0};
    std::vector<double> taus{0.01, 0.1, 1.0};
    std::vector<std::uint64_t> sweep_seeds{0, 1, 2, 3, 4};
    std::vector<std::uint64_t> best_seeds{5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
    /// Evaluation schedule for the sweep points; the best point is re-run
    /// with the experiment's own schedule.
    std::int64_t eval_interval = 10000;
    int eval_episodes = 3;
};

struct ExperimentConfig {
    std::string env = "pendulum";
    PolicyHeadConfig policy;
    AgentConfig agent;
    std::int64_t total_steps = 100000;
    EvalProtocol protocol = EvalProtocol::Best;
    std::int64_t eval_interval = 1000;
    int eval_episodes = 1;
    /// Evaluation samples from the frozen policy; true uses its mean action.
    bool eval_deterministic = false;
    /// Uniform random actions before the policy takes over (online only).
    std::int64_t warmup_steps = 0;
    std::size_t buffer_capacity = 1000000;
    /// Stop a seed after the first evaluation whose return exceeds this.
    std::optional<double> stop_return;
    /// Extra actor checkpoints every this many steps; 0 keeps only the final one.
    std::int64_t checkpoint_interval = 0;
    std::vector<std::uint64_t> seeds{0};
    std::string out_dir = "runs";

    /// Offline input for training, output size and behavior for gen-dataset.
    std::string dataset_path;
    std::size_t dataset_size = 100000;
    /// Actor checkpoint used as the behavior policy; empty means uniform random.
    std::string behavior_checkpoint;
    bool behavior_deterministic = false;

    SweepSpec sweep;

    /// Throws ConfigError.
    void validate() const;
};

/// Defaults for online (hidden 64x2, batch 32, polyak 0.01, Adam 0.9/0.999)
/// or offline (hidden 256x2, batch 256, polyak 0.005, Adam 0.9/0.99) runs.
AgentConfig default_agent_config(bool offline);

/// Throws ConfigError on malformed input, unknown keys or invalid values.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Writes every field, so the output reproduces the run when parsed back.
void write_config(std::ostream& out, const ExperimentConfig& config);

/// Sets the policy's action dimension and bounds from the named environment.
void bind_environment(ExperimentConfig& config);

/// "a,b,c" -> {a, b, c}. Throws ConfigError on junk or duplicates.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double x);

} // namespace qexp
