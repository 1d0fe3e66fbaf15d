#include <algorithm>
#include <cmath>

#include "agents_internal.hpp"
#include "qexp/samplers.hpp"

namespace qexp::detail {

namespace {

// The executed policy is the head's mean action.
class Td3Bc final : public Agent {
public:
    Td3Bc(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim, std::size_t capacity, Rng& rng)
        : Agent(config, head, state_dim, capacity, rng), target_actor_(*actor_) {
        const auto in = static_cast<std::size_t>(state_dim + head.action_dim);
        q1_ = make_critic(in, rng);
        q2_ = make_critic(in, rng);
    }

    std::vector<double> act(std::span<const double> state, Rng&) const override { return act_greedy(state); }

    UpdateStats update(Rng& rng) override {
        const auto batch = buffer_.sample(config_.batch_size, rng);
        const auto& head = actor_->head();
        const auto n = static_cast<std::size_t>(head.action_dim);
        UpdateStats stats;

        const auto target_outs = target_actor_.forward(batch.next_states);
        Batch next_actions(batch.size(), n);
        for (std::size_t r = 0; r < batch.size(); ++r) {
            const auto mean = policy_mean_action(head, target_outs[r]);
            for (std::size_t j = 0; j < n; ++j) {
                const double half = 0.5 * (head.action_high[j] - head.action_low[j]);
                const double noise = std::clamp(config_.policy_noise * half * rng.normal(),
                                                -config_.noise_clip * half, config_.noise_clip * half);
                next_actions(r, j) = std::clamp(mean[j] + noise, head.action_low[j], head.action_high[j]);
            }
        }
        const Batch next_in = state_action_input(batch.next_states, next_actions, head);
        const auto t1 = evaluate(q1_.target, next_in);
        const auto t2 = evaluate(q2_.target, next_in);
        std::vector<double> y(batch.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = batch.rewards[i] + (batch.terminated[i] ? 0.0 : config_.gamma * twin_min(t1[i], t2[i]));
        }
        const Batch sa = state_action_input(batch.states, batch.actions, head);
        stats.critic_loss = 0.5 * (regression_step(q1_.net, q1_.opt, sa, y) + regression_step(q2_.net, q2_.opt, sa, y));

        if (++critic_steps_ % static_cast<std::uint64_t>(config_.policy_delay) == 0) {
            stats.actor_loss = actor_update(batch);
            polyak_update(target_actor_.net(), actor_->net(), config_.polyak);
            soft_update(q1_);
            soft_update(q2_);
        }
        return stats;
    }

private:
    // L = mean[-lambda Q1(s, pi(s)) + |pi(s) - a|^2], lambda = bc_alpha / mean|Q1|.
    double actor_update(const TransitionBatch& batch) {
        const auto& head = actor_->head();
        const auto n = static_cast<std::size_t>(head.action_dim);
        const std::size_t b = batch.size();
        MlpTape tape;
        const auto outs = actor_->forward(batch.states, &tape);
        Batch pi(b, n);
        for (std::size_t r = 0; r < b; ++r) {
            const auto mean = policy_mean_action(head, outs[r]);
            std::copy(mean.begin(), mean.end(), pi.row(r));
        }
        MlpTape qtape;
        const Batch q = mlp_forward(q1_.net, state_action_input(batch.states, pi, head), &qtape);
        double mean_abs = 0.0;
        for (double v : q.data) mean_abs += std::abs(v) / static_cast<double>(b);
        const double lambda = config_.bc_alpha / std::max(mean_abs, 1e-8);
        Batch ones(b, 1);
        std::fill(ones.data.begin(), ones.data.end(), 1.0);
        std::vector<double> unused(q1_.net.param_count(), 0.0);
        Batch dq_din;
        mlp_backward(q1_.net, qtape, ones, unused, &dq_din);

        std::vector<PolicyParamGradient> grads(b, PolicyParamGradient(head));
        const double scale = 1.0 / static_cast<double>(b);
        double loss = 0.0;
        std::vector<double> action_grad(n);
        for (std::size_t r = 0; r < b; ++r) {
            loss -= lambda * q.data[r] * scale;
            for (std::size_t j = 0; j < n; ++j) {
                const double diff = pi(r, j) - batch.actions(r, j);
                loss += diff * diff * scale;
                action_grad[j] = (-lambda * dq_din(r, static_cast<std::size_t>(state_dim_) + j) + 2.0 * diff) * scale;
            }
            policy_mean_action_backward(head, outs[r], action_grad, grads[r]);
        }
        actor_step(actor_opt_, actor_->parameter_gradient(tape, outs, grads));
        return loss;
    }

    Actor target_actor_;
    Critic q1_;
    Critic q2_;
    std::uint64_t critic_steps_ = 0;
};

} // namespace

std::unique_ptr<Agent> make_td3bc(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                  std::size_t capacity, Rng& rng) {
    return std::make_unique<Td3Bc>(config, head, state_dim, capacity, rng);
}

} // namespace qexp::detail
