#pragma once

#include <memory>

#include "qexp/agents.hpp"

namespace qexp::detail {

std::unique_ptr<Agent> make_sac(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                std::size_t capacity, Rng& rng);
std::unique_ptr<Agent> make_greedyac(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                     std::size_t capacity, Rng& rng);
std::unique_ptr<Agent> make_tawac_online(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                         std::size_t capacity, Rng& rng);
/// TAWAC, AWAC, IQL and InAC on a fixed dataset.
std::unique_ptr<Agent> make_weighted_offline(const AgentConfig& config, const PolicyHeadConfig& head,
                                             int state_dim, std::size_t capacity, Rng& rng);
std::unique_ptr<Agent> make_td3bc(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                  std::size_t capacity, Rng& rng);

/// Scalar outputs of a one-output network over a batch.
std::vector<double> evaluate(const Mlp& net, const Batch& inputs);

/// Draws one action per state row; returns actions and their log-probabilities.
Batch sample_actions(const Actor& actor, const std::vector<PolicyHeadOutput>& outputs, std::size_t repeats,
                     Rng& rng, std::vector<double>* log_probs);

/// Repeats each row of b `repeats` times consecutively.
Batch repeat_rows(const Batch& b, std::size_t repeats);

} // namespace qexp::detail
