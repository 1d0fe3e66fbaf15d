#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "qexp/nn_core.hpp"

namespace qexp {

class Rng;

struct Transition {
    std::vector<double> state;
    std::vector<double> action;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminated = false;
    /// NaN when unknown.
    double behavior_log_prob = std::numeric_limits<double>::quiet_NaN();

    friend bool operator==(const Transition&, const Transition&) = default;
};

struct TransitionBatch {
    Batch states;
    Batch actions;
    std::vector<double> rewards;
    Batch next_states;
    std::vector<unsigned char> terminated;
    std::vector<double> behavior_log_prob;

    std::size_t size() const { return rewards.size(); }
};

class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-capacity ring buffer with uniform sampling.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, int state_dim, int action_dim);

    /// Throws std::invalid_argument on a dimension mismatch or non-finite field.
    void add(const Transition& t);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    int state_dim() const { return state_dim_; }
    int action_dim() const { return action_dim_; }

    Transition at(std::size_t i) const;
    /// n uniform draws with replacement; throws InsufficientDataError when fewer than n stored.
    TransitionBatch sample(std::size_t n, Rng& rng) const;
    TransitionBatch gather(std::span<const std::size_t> indices) const;

private:
    std::size_t capacity_;
    int state_dim_;
    int action_dim_;
    std::size_t size_ = 0;
    std::size_t cursor_ = 0;
    std::vector<double> states_;
    std::vector<double> actions_;
    std::vector<double> rewards_;
    std::vector<double> next_states_;
    std::vector<unsigned char> terminated_;
    std::vector<double> behavior_log_prob_;
};

} // namespace qexp
