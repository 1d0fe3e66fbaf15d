#include "qexp/replay.hpp"

#include <algorithm>
#include <cmath>

#include "qexp/samplers.hpp"

namespace qexp {

namespace {

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim, int action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
    if (capacity == 0 || state_dim < 1 || action_dim < 1) {
        throw std::invalid_argument("ReplayBuffer: capacity and dimensions must be positive");
    }
    const auto s = static_cast<std::size_t>(state_dim);
    const auto a = static_cast<std::size_t>(action_dim);
    states_.resize(capacity * s);
    actions_.resize(capacity * a);
    rewards_.resize(capacity);
    next_states_.resize(capacity * s);
    terminated_.resize(capacity);
    behavior_log_prob_.resize(capacity);
}

void ReplayBuffer::add(const Transition& t) {
    const auto s = static_cast<std::size_t>(state_dim_);
    const auto a = static_cast<std::size_t>(action_dim_);
    if (t.state.size() != s || t.next_state.size() != s || t.action.size() != a) {
        throw std::invalid_argument("ReplayBuffer::add: dimension mismatch");
    }
    if (!all_finite(t.state) || !all_finite(t.next_state) || !all_finite(t.action) || !std::isfinite(t.reward)) {
        throw std::invalid_argument("ReplayBuffer::add: non-finite transition");
    }
    std::copy(t.state.begin(), t.state.end(), states_.begin() + static_cast<std::ptrdiff_t>(cursor_ * s));
    std::copy(t.action.begin(), t.action.end(), actions_.begin() + static_cast<std::ptrdiff_t>(cursor_ * a));
    std::copy(t.next_state.begin(), t.next_state.end(),
              next_states_.begin() + static_cast<std::ptrdiff_t>(cursor_ * s));
    rewards_[cursor_] = t.reward;
    terminated_[cursor_] = t.terminated ? 1 : 0;
    behavior_log_prob_[cursor_] = t.behavior_log_prob;
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::at(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("ReplayBuffer::at");
    const auto s = static_cast<std::size_t>(state_dim_);
    const auto a = static_cast<std::size_t>(action_dim_);
    Transition t;
    t.state.assign(states_.begin() + static_cast<std::ptrdiff_t>(i * s),
                   states_.begin() + static_cast<std::ptrdiff_t>((i + 1) * s));
    t.action.assign(actions_.begin() + static_cast<std::ptrdiff_t>(i * a),
                    actions_.begin() + static_cast<std::ptrdiff_t>((i + 1) * a));
    t.reward = rewards_[i];
    t.next_state.assign(next_states_.begin() + static_cast<std::ptrdiff_t>(i * s),
                        next_states_.begin() + static_cast<std::ptrdiff_t>((i + 1) * s));
    t.terminated = terminated_[i] != 0;
    t.behavior_log_prob = behavior_log_prob_[i];
    return t;
}

TransitionBatch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
    const auto s = static_cast<std::size_t>(state_dim_);
    const auto a = static_cast<std::size_t>(action_dim_);
    const std::size_t n = indices.size();
    TransitionBatch b;
    b.states = Batch(n, s);
    b.actions = Batch(n, a);
    b.next_states = Batch(n, s);
    b.rewards.resize(n);
    b.terminated.resize(n);
    b.behavior_log_prob.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = indices[r];
        if (i >= size_) throw std::out_of_range("ReplayBuffer::gather");
        std::copy_n(states_.data() + i * s, s, b.states.row(r));
        std::copy_n(actions_.data() + i * a, a, b.actions.row(r));
        std::copy_n(next_states_.data() + i * s, s, b.next_states.row(r));
        b.rewards[r] = rewards_[i];
        b.terminated[r] = terminated_[i];
        b.behavior_log_prob[r] = behavior_log_prob_[i];
    }
    return b;
}

TransitionBatch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (size_ < n || size_ == 0) {
        throw InsufficientDataError("replay buffer holds fewer transitions than the batch size");
    }
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.index(size_);
    return gather(idx);
}

} // namespace qexp
