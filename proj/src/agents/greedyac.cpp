#include <cmath>

#include "agents_internal.hpp"
#include "qexp/samplers.hpp"

namespace qexp::detail {

namespace {

// The proposal policy draws candidate actions; the actor and the proposal
// both fit the top rho fraction by critic value, the proposal with an
// entropy bonus weighted by tau.
class GreedyAc final : public Agent {
public:
    GreedyAc(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim, std::size_t capacity, Rng& rng)
        : Agent(config, head, state_dim, capacity, rng),
          proposal_(head, state_dim, config.hidden, rng),
          proposal_opt_(proposal_.net().param_count(), config.critic_lr * config.actor_lr_multiplier,
                        config.adam_beta1, config.adam_beta2, config.adam_epsilon) {
        q_ = make_critic(static_cast<std::size_t>(state_dim + head.action_dim), rng);
    }

    UpdateStats update(Rng& rng) override {
        const auto batch = buffer_.sample(config_.batch_size, rng);
        UpdateStats stats;
        stats.critic_loss = critic_update(batch, rng);
        stats.actor_loss = policy_updates(batch, rng);
        soft_update(q_);
        return stats;
    }

private:
    double critic_update(const TransitionBatch& batch, Rng& rng) {
        const auto& head = actor_->head();
        const auto next_outs = actor_->forward(batch.next_states);
        const Batch next_actions = sample_actions(*actor_, next_outs, 1, rng, nullptr);
        const auto next_q = evaluate(q_.target, state_action_input(batch.next_states, next_actions, head));
        std::vector<double> y(batch.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = batch.rewards[i] + (batch.terminated[i] ? 0.0 : config_.gamma * next_q[i]);
        }
        return regression_step(q_.net, q_.opt, state_action_input(batch.states, batch.actions, head), y);
    }

    double policy_updates(const TransitionBatch& batch, Rng& rng) {
        const auto& head = actor_->head();
        const auto p = static_cast<std::size_t>(config_.proposal_samples);
        const std::size_t b = batch.size();

        MlpTape prop_tape;
        const auto prop_outs = proposal_.forward(batch.states, &prop_tape);
        std::vector<double> prop_lp;
        const Batch candidates = sample_actions(proposal_, prop_outs, p, rng, &prop_lp);
        const auto values = evaluate(q_.net, state_action_input(repeat_rows(batch.states, p), candidates, head));

        MlpTape actor_tape;
        const auto actor_outs = actor_->forward(batch.states, &actor_tape);
        std::vector<PolicyParamGradient> actor_grads(b, PolicyParamGradient(head));
        std::vector<PolicyParamGradient> prop_grads(b, PolicyParamGradient(head));
        double actor_loss = 0.0;
        for (std::size_t r = 0; r < b; ++r) {
            const std::span<const double> vals(values.data() + r * p, p);
            const auto top = top_k_indices(vals, config_.rho);
            const double w = 1.0 / static_cast<double>(b * top.size());
            for (std::size_t idx : top) {
                const auto a = candidates.row_span(r * p + idx);
                const auto rep = log_prob_with_replacement(head, actor_outs[r], a, rng);
                actor_loss -= w * policy_accumulate_grad(head, actor_outs[r], rep.action, -w, actor_grads[r]);
                policy_accumulate_grad(head, prop_outs[r], a, -w, prop_grads[r]);
            }
            if (p >= 2) {
                // Entropy bonus: grad H = -E[(ln pi - b) grad ln pi], leave-one-out baseline.
                double total = 0.0;
                for (std::size_t j = 0; j < p; ++j) total += prop_lp[r * p + j];
                const double scale = config_.tau / static_cast<double>(b * p);
                for (std::size_t j = 0; j < p; ++j) {
                    const double lp = prop_lp[r * p + j];
                    const double baseline = (total - lp) / static_cast<double>(p - 1);
                    policy_accumulate_grad(head, prop_outs[r], candidates.row_span(r * p + j),
                                           scale * (lp - baseline), prop_grads[r]);
                }
            }
        }
        actor_step(actor_opt_, actor_->parameter_gradient(actor_tape, actor_outs, actor_grads));
        adam_step(proposal_.net(), proposal_.parameter_gradient(prop_tape, prop_outs, prop_grads), proposal_opt_);
        return actor_loss;
    }

    Actor proposal_;
    AdamState proposal_opt_;
    Critic q_;
};

} // namespace

std::unique_ptr<Agent> make_greedyac(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                     std::size_t capacity, Rng& rng) {
    return std::make_unique<GreedyAc>(config, head, state_dim, capacity, rng);
}

} // namespace qexp::detail
