#include <algorithm>

#include "agents_internal.hpp"
#include "qexp/samplers.hpp"

namespace qexp::detail {

namespace {

// Online TAWAC: actions for the weighted likelihood come from a Polyak-averaged
// target actor; V(s) regresses onto the mean critic value of value_samples
// target-actor draws.
class TawacOnline final : public Agent {
public:
    TawacOnline(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim, std::size_t capacity,
                Rng& rng)
        : Agent(config, head, state_dim, capacity, rng), target_actor_(*actor_) {
        q_ = make_critic(static_cast<std::size_t>(state_dim + head.action_dim), rng);
        v_ = make_critic(static_cast<std::size_t>(state_dim), rng);
    }

    UpdateStats update(Rng& rng) override {
        const auto batch = buffer_.sample(config_.batch_size, rng);
        const auto& head = actor_->head();
        UpdateStats stats;

        const auto next_outs = actor_->forward(batch.next_states);
        const Batch next_actions = sample_actions(*actor_, next_outs, 1, rng, nullptr);
        const auto next_q = evaluate(q_.target, state_action_input(batch.next_states, next_actions, head));
        std::vector<double> y(batch.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = batch.rewards[i] + (batch.terminated[i] ? 0.0 : config_.gamma * next_q[i]);
        }
        stats.critic_loss = regression_step(q_.net, q_.opt, state_action_input(batch.states, batch.actions, head), y);

        const auto k = static_cast<std::size_t>(config_.value_samples);
        const auto target_outs = target_actor_.forward(batch.states);
        const Batch draws = sample_actions(target_actor_, target_outs, k, rng, nullptr);
        const auto draw_q = evaluate(q_.net, state_action_input(repeat_rows(batch.states, k), draws, head));
        std::vector<double> v_target(batch.size(), 0.0);
        for (std::size_t r = 0; r < batch.size(); ++r) {
            for (std::size_t j = 0; j < k; ++j) v_target[r] += draw_q[r * k + j] / static_cast<double>(k);
        }
        stats.value_loss = regression_step(v_.net, v_.opt, batch.states, v_target);

        const Batch actions = sample_actions(target_actor_, target_outs, 1, rng, nullptr);
        const auto q = evaluate(q_.net, state_action_input(batch.states, actions, head));
        const auto v = evaluate(v_.net, batch.states);
        std::vector<double> weights(batch.size());
        std::size_t zeros = 0;
        for (std::size_t r = 0; r < batch.size(); ++r) {
            weights[r] = tawac_weight(q[r] - v[r], config_.tau, config_.q_prime, config_.max_weight);
            zeros += weights[r] == 0.0 ? 1 : 0;
        }
        stats.zero_weight_fraction = static_cast<double>(zeros) / static_cast<double>(batch.size());
        const auto loss = weighted_likelihood_loss(*actor_, batch.states, actions, weights, rng);
        stats.actor_loss = loss.loss;
        actor_step(actor_opt_, loss.gradient);

        soft_update(q_);
        polyak_update(target_actor_.net(), actor_->net(), config_.polyak);
        return stats;
    }

private:
    Actor target_actor_;
    Critic q_;
    Critic v_;
};

} // namespace

std::unique_ptr<Agent> make_tawac_online(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                         std::size_t capacity, Rng& rng) {
    return std::make_unique<TawacOnline>(config, head, state_dim, capacity, rng);
}

} // namespace qexp::detail
