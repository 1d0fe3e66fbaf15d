#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "agents_internal.hpp"
#include "qexp/samplers.hpp"

namespace qexp::detail {

namespace {

class Sac final : public Agent {
public:
    Sac(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim, std::size_t capacity, Rng& rng)
        : Agent(config, head, state_dim, capacity, rng) {
        const auto in = static_cast<std::size_t>(state_dim + head.action_dim);
        q1_ = make_critic(in, rng);
        q2_ = make_critic(in, rng);
        if (config_.reparameterize && head.family != PolicyFamily::Gaussian) {
            throw std::invalid_argument("reparameterized SAC is implemented for the Gaussian family only");
        }
    }

    UpdateStats update(Rng& rng) override {
        const auto batch = buffer_.sample(config_.batch_size, rng);
        UpdateStats stats;
        stats.critic_loss = critic_update(batch, rng);
        stats.actor_loss = config_.reparameterize ? actor_update_pathwise(batch, rng) : actor_update(batch, rng);
        soft_update(q1_);
        soft_update(q2_);
        return stats;
    }

private:
    double critic_update(const TransitionBatch& batch, Rng& rng) {
        const auto& head = actor_->head();
        const auto next_outs = actor_->forward(batch.next_states);
        std::vector<double> next_lp;
        const Batch next_actions = sample_actions(*actor_, next_outs, 1, rng, &next_lp);
        const Batch next_in = state_action_input(batch.next_states, next_actions, head);
        const auto t1 = evaluate(q1_.target, next_in);
        const auto t2 = evaluate(q2_.target, next_in);
        std::vector<double> y(batch.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double soft_v = twin_min(t1[i], t2[i]) - config_.tau * next_lp[i];
            y[i] = batch.rewards[i] + (batch.terminated[i] ? 0.0 : config_.gamma * soft_v);
        }
        const Batch in = state_action_input(batch.states, batch.actions, head);
        return 0.5 * (regression_step(q1_.net, q1_.opt, in, y) + regression_step(q2_.net, q2_.opt, in, y));
    }

    // Score-function gradient of E[tau ln pi - Q] with a leave-one-out baseline.
    double actor_update(const TransitionBatch& batch, Rng& rng) {
        const auto& head = actor_->head();
        const auto k = static_cast<std::size_t>(config_.sac_samples);
        MlpTape tape;
        const auto outs = actor_->forward(batch.states, &tape);
        std::vector<double> lp;
        const Batch actions = sample_actions(*actor_, outs, k, rng, &lp);
        const Batch in = state_action_input(repeat_rows(batch.states, k), actions, head);
        const auto v1 = evaluate(q1_.net, in);
        const auto v2 = evaluate(q2_.net, in);
        std::vector<PolicyParamGradient> grads(outs.size(), PolicyParamGradient(head));
        const double scale = 1.0 / static_cast<double>(outs.size() * k);
        double loss = 0.0;
        std::vector<double> f(k);
        for (std::size_t r = 0; r < outs.size(); ++r) {
            double total = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t row = r * k + j;
                f[j] = config_.tau * lp[row] - twin_min(v1[row], v2[row]);
                total += f[j];
            }
            loss += total * scale;
            for (std::size_t j = 0; j < k; ++j) {
                const double baseline = (total - f[j]) / static_cast<double>(k - 1);
                policy_accumulate_grad(head, outs[r], actions.row_span(r * k + j), (f[j] - baseline) * scale,
                                       grads[r]);
            }
        }
        actor_step(actor_opt_, actor_->parameter_gradient(tape, outs, grads));
        return loss;
    }

    // a = mu + sigma eps; ln pi(a) = -eps^2/2 - ln sigma + const along the path.
    double actor_update_pathwise(const TransitionBatch& batch, Rng& rng) {
        const auto& head = actor_->head();
        const auto n = static_cast<std::size_t>(head.action_dim);
        MlpTape tape;
        const auto outs = actor_->forward(batch.states, &tape);
        Batch eps(outs.size(), n);
        Batch actions(outs.size(), n);
        for (std::size_t r = 0; r < outs.size(); ++r) {
            for (std::size_t j = 0; j < n; ++j) {
                eps(r, j) = rng.normal();
                actions(r, j) = outs[r].mu[j] + outs[r].sigma[j] * eps(r, j);
            }
        }
        const Batch in = state_action_input(batch.states, actions, head);
        MlpTape qtape;
        const Batch q = mlp_forward(q1_.net, in, &qtape);
        Batch ones(q.rows, 1);
        std::fill(ones.data.begin(), ones.data.end(), 1.0);
        std::vector<double> unused(q1_.net.param_count(), 0.0);
        Batch dq_din;
        mlp_backward(q1_.net, qtape, ones, unused, &dq_din);
        std::vector<PolicyParamGradient> grads(outs.size(), PolicyParamGradient(head));
        const double scale = 1.0 / static_cast<double>(outs.size());
        double loss = 0.0;
        for (std::size_t r = 0; r < outs.size(); ++r) {
            loss += (config_.tau * policy_log_prob(head, outs[r], actions.row_span(r)) - q.data[r]) * scale;
            for (std::size_t j = 0; j < n; ++j) {
                const double a = actions(r, j);
                // Clipping inside the critic input zeroes the action gradient.
                const bool inside = a > head.action_low[j] && a < head.action_high[j];
                const double dq = inside ? dq_din(r, static_cast<std::size_t>(state_dim_) + j) : 0.0;
                grads[r].mu[j] += -dq * scale;
                grads[r].sigma[j] += (-config_.tau / outs[r].sigma[j] - dq * eps(r, j)) * scale;
            }
        }
        actor_step(actor_opt_, actor_->parameter_gradient(tape, outs, grads));
        return loss;
    }

    Critic q1_;
    Critic q2_;
};

} // namespace

std::unique_ptr<Agent> make_sac(const AgentConfig& config, const PolicyHeadConfig& head, int state_dim,
                                std::size_t capacity, Rng& rng) {
    return std::make_unique<Sac>(config, head, state_dim, capacity, rng);
}

} // namespace qexp::detail
