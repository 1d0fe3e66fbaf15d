#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "agents_internal.hpp"
#include "qexp/deformed_math.hpp"
#include "qexp/samplers.hpp"

namespace qexp {

Algorithm parse_algorithm(std::string_view name) {
    if (name == "sac") return Algorithm::Sac;
    if (name == "greedyac") return Algorithm::GreedyAc;
    if (name == "tawac") return Algorithm::Tawac;
    if (name == "awac") return Algorithm::Awac;
    if (name == "iql") return Algorithm::Iql;
    if (name == "inac") return Algorithm::Inac;
    if (name == "td3bc") return Algorithm::Td3bc;
    throw std::invalid_argument("unknown agent '" + std::string(name) + "'");
}

std::string_view algorithm_name(Algorithm algorithm) {
    switch (algorithm) {
    case Algorithm::Sac: return "sac";
    case Algorithm::GreedyAc: return "greedyac";
    case Algorithm::Tawac: return "tawac";
    case Algorithm::Awac: return "awac";
    case Algorithm::Iql: return "iql";
    case Algorithm::Inac: return "inac";
    case Algorithm::Td3bc: return "td3bc";
    }
    return "unknown";
}

bool supports_online(Algorithm a) {
    return a == Algorithm::Sac || a == Algorithm::GreedyAc || a == Algorithm::Tawac;
}

bool supports_offline(Algorithm a) {
    return a == Algorithm::Tawac || a == Algorithm::Awac || a == Algorithm::Iql || a == Algorithm::Inac ||
           a == Algorithm::Td3bc;
}

void AgentConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("agent config: ") + what);
    };
    require(offline ? supports_offline(algorithm) : supports_online(algorithm),
            "algorithm not available in this mode");
    require(tau > 0.0, "tau must be positive");
    require(q_prime < 3.0, "q_prime must be < 3");
    require(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
    require(proposal_samples >= 1, "proposal_samples must be >= 1");
    require(expectile > 0.0 && expectile < 1.0, "expectile must lie in (0, 1)");
    require(bc_alpha >= 0.0, "bc_alpha must be non-negative");
    require(critic_lr > 0.0 && actor_lr_multiplier > 0.0, "learning rates must be positive");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(polyak > 0.0 && polyak <= 1.0, "polyak must lie in (0, 1]");
    require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    require(!hidden.empty() && std::all_of(hidden.begin(), hidden.end(), [](std::size_t h) { return h > 0; }),
            "hidden sizes must be positive");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
            "Adam betas must lie in [0, 1)");
    require(adam_epsilon > 0.0, "adam_epsilon must be positive");
    require(value_samples >= 1, "value_samples must be >= 1");
    require(sac_samples >= 2, "sac_samples must be >= 2");
    require(max_weight > 0.0, "max_weight must be positive");
    require(policy_noise >= 0.0 && noise_clip >= 0.0, "TD3BC noise must be non-negative");
    require(policy_delay >= 1, "policy_delay must be >= 1");
}

Actor::Actor(PolicyHeadConfig head, int state_dim, const std::vector<std::size_t>& hidden, Rng& rng)
    : head_(std::move(head)) {
    head_.validate();
    std::vector<std::size_t> sizes{static_cast<std::size_t>(state_dim)};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(head_.raw_size());
    net_ = Mlp::initialized(std::move(sizes), rng);
}

std::vector<PolicyHeadOutput> Actor::forward(const Batch& states, MlpTape* tape) const {
    const Batch raw = mlp_forward(net_, states, tape);
    std::vector<PolicyHeadOutput> outs;
    outs.reserve(raw.rows);
    for (std::size_t r = 0; r < raw.rows; ++r) outs.push_back(head_forward(head_, raw.row_span(r)));
    return outs;
}

PolicyHeadOutput Actor::forward(std::span<const double> state) const {
    const auto raw = mlp_forward(net_, state);
    return head_forward(head_, raw);
}

std::vector<double> Actor::parameter_gradient(const MlpTape& tape, const std::vector<PolicyHeadOutput>& outputs,
                                              const std::vector<PolicyParamGradient>& grads) const {
    Batch raw_grad(outputs.size(), head_.raw_size());
    for (std::size_t r = 0; r < outputs.size(); ++r) {
        head_backward(head_, outputs[r], grads[r], raw_grad.row_span(r));
    }
    std::vector<double> g(net_.param_count(), 0.0);
    mlp_backward(net_, tape, raw_grad, g);
    return g;
}

ActorLoss weighted_likelihood_loss(const Actor& actor, const Batch& states, const Batch& actions,
                                   std::span<const double> weights, Rng& rng) {
    const std::size_t n = states.rows;
    if (actions.rows != n || weights.size() != n || n == 0) {
        throw std::invalid_argument("weighted_likelihood_loss: batch shape mismatch");
    }
    MlpTape tape;
    const auto outs = actor.forward(states, &tape);
    std::vector<PolicyParamGradient> grads(n, PolicyParamGradient(actor.head()));
    ActorLoss result;
    const double scale = 1.0 / static_cast<double>(n);
    std::size_t replaced = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto rep = log_prob_with_replacement(actor.head(), outs[r], actions.row_span(r), rng);
        replaced += rep.replaced ? 1 : 0;
        if (weights[r] == 0.0) continue;
        const double lp = policy_accumulate_grad(actor.head(), outs[r], rep.action, -weights[r] * scale, grads[r]);
        result.loss -= weights[r] * lp * scale;
    }
    result.gradient = actor.parameter_gradient(tape, outs, grads);
    result.replaced_fraction = static_cast<double>(replaced) * scale;
    return result;
}

double awac_weight(double advantage, double tau, double max_weight) {
    return std::min(std::exp(advantage / tau), max_weight);
}

double tawac_weight(double advantage, double tau, double q_prime, double max_weight) {
    return std::min(exp_q(advantage / tau, EntropicIndex(q_prime)), max_weight);
}

double inac_weight(double advantage, double tau, double behavior_log_prob, double max_weight) {
    if (std::isnan(behavior_log_prob)) {
        throw std::invalid_argument("InAC needs the behavior log-probability of every transition");
    }
    return std::min(std::exp(advantage / tau - behavior_log_prob), max_weight);
}

std::vector<std::size_t> top_k_indices(std::span<const double> values, double rho) {
    if (values.empty() || !(rho > 0.0 && rho <= 1.0)) {
        throw std::invalid_argument("top_k_indices: need values and rho in (0, 1]");
    }
    const auto k = std::min(values.size(),
                            static_cast<std::size_t>(std::ceil(rho * static_cast<double>(values.size()) - 1e-9)));
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(k, 1)), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          return values[a] > values[b] || (values[a] == values[b] && a < b);
                      });
    idx.resize(std::max<std::size_t>(k, 1));
    return idx;
}

double twin_min(double q1, double q2) { return std::min(q1, q2); }

double regression_step(Mlp& net, AdamState& opt, const Batch& inputs, std::span<const double> targets,
                       double expectile) {
    if (net.output_size() != 1 || targets.size() != inputs.rows) {
        throw std::invalid_argument("regression_step: shape mismatch");
    }
    MlpTape tape;
    const Batch out = mlp_forward(net, inputs, &tape);
    Batch grad(out.rows, 1);
    double loss = 0.0;
    const double scale = 1.0 / static_cast<double>(out.rows);
    for (std::size_t r = 0; r < out.rows; ++r) {
        const double u = targets[r] - out.data[r];
        const double w = u >= 0.0 ? expectile : 1.0 - expectile;
        loss += w * u * u * scale;
        grad.data[r] = -2.0 * w * u * scale;
    }
    std::vector<double> g(net.param_count(), 0.0);
    mlp_backward(net, tape, grad, g);
    adam_step(net, g, opt);
    return loss;
}

Batch state_action_input(const Batch& states, const Batch& actions, const PolicyHeadConfig& head) {
    if (states.rows != actions.rows || actions.cols != static_cast<std::size_t>(head.action_dim)) {
        throw std::invalid_argument("state_action_input: shape mismatch");
    }
    Batch in(states.rows, states.cols + actions.cols);
    for (std::size_t r = 0; r < states.rows; ++r) {
        double* dst = in.row(r);
        std::copy_n(states.row(r), states.cols, dst);
        for (std::size_t j = 0; j < actions.cols; ++j) {
            const double a = actions(r, j);
            dst[states.cols + j] = std::isnan(a) ? head.action_low[j] : std::clamp(a, head.action_low[j], head.action_high[j]);
        }
    }
    return in;
}

Agent::Agent(AgentConfig config, PolicyHeadConfig head, int state_dim, std::size_t buffer_capacity, Rng& rng)
    : config_(std::move(config)), state_dim_(state_dim), buffer_(buffer_capacity, state_dim, head.action_dim) {
    config_.validate();
    actor_ = std::make_unique<Actor>(std::move(head), state_dim, config_.hidden, rng);
    actor_opt_ = make_actor_opt();
}

std::vector<double> Agent::act(std::span<const double> state, Rng& rng) const {
    return policy_sample(actor_->head(), actor_->forward(state), rng);
}

std::vector<double> Agent::act_greedy(std::span<const double> state) const {
    return policy_mean_action(actor_->head(), actor_->forward(state));
}

Critic Agent::make_critic(std::size_t input_dim, Rng& rng) const {
    std::vector<std::size_t> sizes{input_dim};
    sizes.insert(sizes.end(), config_.hidden.begin(), config_.hidden.end());
    sizes.push_back(1);
    Critic c;
    c.net = Mlp::initialized(std::move(sizes), rng);
    c.target = c.net;
    c.opt = AdamState(c.net.param_count(), config_.critic_lr, config_.adam_beta1, config_.adam_beta2,
                      config_.adam_epsilon);
    return c;
}

AdamState Agent::make_actor_opt() const {
    return AdamState(actor_->net().param_count(), config_.critic_lr * config_.actor_lr_multiplier,
                     config_.adam_beta1, config_.adam_beta2, config_.adam_epsilon);
}

void Agent::actor_step(AdamState& opt, std::span<const double> gradient) { adam_step(actor_->net(), gradient, opt); }

void Agent::soft_update(Critic& critic) const { polyak_update(critic.target, critic.net, config_.polyak); }

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                  std::size_t buffer_capacity, Rng& rng) {
    config.validate();
    if (config.offline) {
        if (config.algorithm == Algorithm::Td3bc) return detail::make_td3bc(config, head, state_dim, buffer_capacity, rng);
        return detail::make_weighted_offline(config, head, state_dim, buffer_capacity, rng);
    }
    switch (config.algorithm) {
    case Algorithm::Sac: return detail::make_sac(config, head, state_dim, buffer_capacity, rng);
    case Algorithm::GreedyAc: return detail::make_greedyac(config, head, state_dim, buffer_capacity, rng);
    case Algorithm::Tawac: return detail::make_tawac_online(config, head, state_dim, buffer_capacity, rng);
    default: break;
    }
    throw std::invalid_argument("agent not available online");
}

namespace detail {

std::vector<double> evaluate(const Mlp& net, const Batch& inputs) { return mlp_forward(net, inputs).data; }

Batch sample_actions(const Actor& actor, const std::vector<PolicyHeadOutput>& outputs, std::size_t repeats,
                     Rng& rng, std::vector<double>* log_probs) {
    const auto& head = actor.head();
    Batch actions(outputs.size() * repeats, static_cast<std::size_t>(head.action_dim));
    if (log_probs != nullptr) log_probs->assign(actions.rows, 0.0);
    for (std::size_t r = 0; r < outputs.size(); ++r) {
        for (std::size_t k = 0; k < repeats; ++k) {
            const std::size_t row = r * repeats + k;
            const auto a = policy_sample(head, outputs[r], rng);
            std::copy(a.begin(), a.end(), actions.row(row));
            if (log_probs != nullptr) (*log_probs)[row] = policy_log_prob(head, outputs[r], a);
        }
    }
    return actions;
}

Batch repeat_rows(const Batch& b, std::size_t repeats) {
    Batch out(b.rows * repeats, b.cols);
    for (std::size_t r = 0; r < b.rows; ++r) {
        for (std::size_t k = 0; k < repeats; ++k) std::copy_n(b.row(r), b.cols, out.row(r * repeats + k));
    }
    return out;
}

} // namespace detail

} // namespace qexp
