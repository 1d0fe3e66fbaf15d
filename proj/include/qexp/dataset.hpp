#pragma once

// Offline dataset container.
//
// Layout, little-endian:
//   char[4]  "QXDS"
//   u32      version (1)
//   u32 + n  environment name (length-prefixed bytes)
//   u32      state dimension S
//   u32      action dimension A
//   u64      record count
//   records: f64[S] state, f64[A] action, f64 reward, f64[S] next_state,
//            u8 terminated, f64 behavior_log_prob (NaN when unknown)

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qexp/replay.hpp"

namespace qexp {

class Environment;
class Rng;

inline constexpr std::uint32_t kDatasetVersion = 1;

struct Dataset {
    std::string env_name;
    int state_dim = 0;
    int action_dim = 0;
    std::vector<Transition> transitions;
};

void write_dataset(std::ostream& out, const Dataset& data);
/// Throws std::runtime_error on a bad magic, version or truncated record.
Dataset read_dataset(std::istream& in);
void write_dataset(const std::string& path, const Dataset& data);
Dataset read_dataset(const std::string& path);

ReplayBuffer to_replay_buffer(const Dataset& data);

/// Returns an action and its exact log-probability under the behavior policy.
using BehaviorPolicy = std::function<std::pair<std::vector<double>, double>(std::span<const double>, Rng&)>;

/// Rolls the behavior policy in env for n transitions, resetting on episode end.
Dataset generate_offline_dataset(Environment& env, const BehaviorPolicy& behavior, std::size_t n, Rng& rng);

} // namespace qexp
