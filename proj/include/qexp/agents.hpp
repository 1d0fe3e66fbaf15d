#pragma once

// Actor-critic agents. Online: SAC, GreedyAC, TAWAC. Offline: TAWAC, AWAC,
// IQL, InAC, TD3BC.
//
// Replay actions are stored unclipped so log-probabilities stay exact;
// critics always see actions clipped to the environment bounds.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qexp/nn_core.hpp"
#include "qexp/policy_heads.hpp"
#include "qexp/replay.hpp"

namespace qexp {

class Rng;

enum class Algorithm { Sac, GreedyAc, Tawac, Awac, Iql, Inac, Td3bc };

/// Throws std::invalid_argument on an unknown name.
Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm algorithm);
bool supports_online(Algorithm algorithm);
bool supports_offline(Algorithm algorithm);

struct AgentConfig {
    Algorithm algorithm = Algorithm::Sac;
    bool offline = false;
    double tau = 0.1;
    double q_prime = 0.0;
    double rho = 0.1;
    int proposal_samples = 30;
    double expectile = 0.7;
    double bc_alpha = 2.5;
    double critic_lr = 1e-3;
    double actor_lr_multiplier = 1.0;
    std::size_t batch_size = 32;
    double polyak = 0.01;
    double gamma = 0.99;
    std::vector<std::size_t> hidden{64, 64};
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    /// Policy draws per state for the online value target.
    int value_samples = 4;
    /// Policy draws per state for the score-function actor gradient.
    int sac_samples = 4;
    /// Cap on every advantage weight.
    double max_weight = 100.0;
    /// Gaussian-only pathwise actor gradient for SAC.
    bool reparameterize = false;
    double policy_noise = 0.2;
    double noise_clip = 0.5;
    int policy_delay = 2;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Policy network plus head.
class Actor {
public:
    Actor(PolicyHeadConfig head, int state_dim, const std::vector<std::size_t>& hidden, Rng& rng);
    /// Wraps an existing network. Throws std::invalid_argument unless its
    /// output width is head.raw_size().
    Actor(PolicyHeadConfig head, Mlp net);

    const PolicyHeadConfig& head() const { return head_; }
    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    std::vector<PolicyHeadOutput> forward(const Batch& states, MlpTape* tape = nullptr) const;
    PolicyHeadOutput forward(std::span<const double> state) const;

    /// Loss gradient in network-parameter space from per-row gradients of
    /// the loss with respect to the distribution parameters.
    std::vector<double> parameter_gradient(const MlpTape& tape, const std::vector<PolicyHeadOutput>& outputs,
                                           const std::vector<PolicyParamGradient>& grads) const;

private:
    PolicyHeadConfig head_;
    Mlp net_;
};

/// Scalar-output critic on (state, clipped action) or on state alone.
struct Critic {
    Mlp net;
    Mlp target;
    AdamState opt;
};

struct ActorLoss {
    double loss = 0.0;
    /// d loss / d actor network parameters.
    std::vector<double> gradient;
    /// Fraction of rows whose action was replaced by an in-support draw.
    double replaced_fraction = 0.0;
};

/// -mean_i w_i ln pi(a_i | s_i). Out-of-support actions of a light-tailed
/// policy are replaced by the nearest on-policy draw.
ActorLoss weighted_likelihood_loss(const Actor& actor, const Batch& states, const Batch& actions,
                                   std::span<const double> weights, Rng& rng);

double awac_weight(double advantage, double tau, double max_weight);
/// exp_{q'}(advantage / tau), capped.
double tawac_weight(double advantage, double tau, double q_prime, double max_weight);
double inac_weight(double advantage, double tau, double behavior_log_prob, double max_weight);

/// Indices of the ceil(rho n) largest values; ties keep the lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> values, double rho);

/// min over the two target critics, as used by the clipped double-Q target.
double twin_min(double q1, double q2);

/// One gradient step on mean_i e_i (y_i - f(x_i))^2 with e_i = expectile
/// when y_i >= f(x_i) and 1 - expectile otherwise. Returns the loss.
double regression_step(Mlp& net, AdamState& opt, const Batch& inputs, std::span<const double> targets,
                       double expectile = 0.5);

/// Rows [state, clip(action)].
Batch state_action_input(const Batch& states, const Batch& actions, const PolicyHeadConfig& head);

struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double value_loss = 0.0;
    /// Fraction of advantage weights that are exactly zero.
    double zero_weight_fraction = 0.0;
};

class Agent {
public:
    virtual ~Agent() = default;

    const AgentConfig& config() const { return config_; }
    const Actor& actor() const { return *actor_; }
    Actor& actor() { return *actor_; }
    ReplayBuffer& buffer() { return buffer_; }
    const ReplayBuffer& buffer() const { return buffer_; }

    /// Exploratory action drawn from the policy (unclipped).
    virtual std::vector<double> act(std::span<const double> state, Rng& rng) const;
    /// Deterministic action: the policy mean.
    std::vector<double> act_greedy(std::span<const double> state) const;

    /// One gradient step; throws InsufficientDataError when the buffer is
    /// smaller than the batch size.
    virtual UpdateStats update(Rng& rng) = 0;

protected:
    Agent(AgentConfig config, PolicyHeadConfig head, int state_dim, std::size_t buffer_capacity, Rng& rng);

    Critic make_critic(std::size_t input_dim, Rng& rng) const;
    AdamState make_actor_opt() const;
    void actor_step(AdamState& opt, std::span<const double> gradient);
    void soft_update(Critic& critic) const;

    AgentConfig config_;
    int state_dim_;
    std::unique_ptr<Actor> actor_;
    AdamState actor_opt_;
    ReplayBuffer buffer_;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                  std::size_t buffer_capacity, Rng& rng);

/// Actor checkpoint: the head configuration followed by the network in the
/// save_mlp format.
///   8 bytes  magic "QXACT001"
///   u32      version (1)
///   u32 + n  family name
///   f64      q, nu_base, log_std_min, log_std_max
///   u32      replacement_batch, action_dim
///   f64 x2A  action_low, action_high
///   ...      network
void save_actor(std::ostream& out, const Actor& actor);
/// Throws std::runtime_error on a malformed or truncated stream.
Actor load_actor(std::istream& in);
void save_actor(const std::string& path, const Actor& actor);
Actor load_actor(const std::string& path);

} // namespace qexp
