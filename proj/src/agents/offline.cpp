#include <algorithm>

#include "agents_internal.hpp"
#include "qexp/samplers.hpp"

namespace qexp::detail {

namespace {

// Shared offline pipeline: expectile V on target-critic values of dataset
// actions, in-sample TD target r + gamma V(s'), and an advantage-weighted
// likelihood actor. The algorithms differ only in the weight.
class WeightedOffline final : public Agent {
public:
    WeightedOffline(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim, std::size_t capacity,
                    Rng& rng)
        : Agent(config, head, state_dim, capacity, rng) {
        q_ = make_critic(static_cast<std::size_t>(state_dim + head.action_dim), rng);
        v_ = make_critic(static_cast<std::size_t>(state_dim), rng);
    }

    UpdateStats update(Rng& rng) override {
        const auto batch = buffer_.sample(config_.batch_size, rng);
        const auto& head = actor_->head();
        const Batch sa = state_action_input(batch.states, batch.actions, head);
        UpdateStats stats;

        const auto q_hat = evaluate(q_.target, sa);
        stats.value_loss = regression_step(v_.net, v_.opt, batch.states, q_hat, config_.expectile);

        const auto next_v = evaluate(v_.net, batch.next_states);
        std::vector<double> y(batch.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = batch.rewards[i] + (batch.terminated[i] ? 0.0 : config_.gamma * next_v[i]);
        }
        stats.critic_loss = regression_step(q_.net, q_.opt, sa, y);

        const auto v = evaluate(v_.net, batch.states);
        std::vector<double> weights(batch.size());
        std::size_t zeros = 0;
        for (std::size_t r = 0; r < batch.size(); ++r) {
            const double adv = q_hat[r] - v[r];
            switch (config_.algorithm) {
            case Algorithm::Tawac:
                weights[r] = tawac_weight(adv, config_.tau, config_.q_prime, config_.max_weight);
                break;
            case Algorithm::Inac:
                weights[r] = inac_weight(adv, config_.tau, batch.behavior_log_prob[r], config_.max_weight);
                break;
            default:
                weights[r] = awac_weight(adv, config_.tau, config_.max_weight);
                break;
            }
            zeros += weights[r] == 0.0 ? 1 : 0;
        }
        stats.zero_weight_fraction = static_cast<double>(zeros) / static_cast<double>(batch.size());
        const auto loss = weighted_likelihood_loss(*actor_, batch.states, batch.actions, weights, rng);
        stats.actor_loss = loss.loss;
        actor_step(actor_opt_, loss.gradient);
        soft_update(q_);
        return stats;
    }

private:
    Critic q_;
    Critic v_;
};

} // namespace

std::unique_ptr<Agent> make_weighted_offline(const AgentConfig& config, const PolicyHeadConfig& head,
                                             int state_dim, std::size_t capacity, Rng& rng) {
    return std::make_unique<WeightedOffline>(config, head, state_dim, capacity, rng);
}

} // namespace qexp::detail
