#pragma once

// Deformed (q-) exponential and logarithm, the Box-Muller index map and the
// special functions the densities need.

namespace qexp {

/// Entropic index q. q < 1 is light-tailed, 1 < q < 3 heavy-tailed and q = 1
/// the ordinary exponential family.
class EntropicIndex {
public:
    /// |q - 1| below this switches exp_q/ln_q to exp/ln.
    static constexpr double kBranchTolerance = 1e-12;

    constexpr EntropicIndex() = default;
    constexpr explicit EntropicIndex(double q) : q_(q) {}

    constexpr double value() const { return q_; }
    constexpr bool is_exp_limit() const {
        return (q_ - 1.0 < kBranchTolerance) && (1.0 - q_ < kBranchTolerance);
    }
    constexpr bool is_light() const { return q_ < 1.0 && !is_exp_limit(); }
    constexpr bool is_heavy() const { return q_ > 1.0 && !is_exp_limit(); }

    friend constexpr bool operator==(EntropicIndex, EntropicIndex) = default;

private:
    double q_ = 1.0;
};

/// [1 + (1-q) x]_+^{1/(1-q)}, or exp(x) at q = 1. Saturates to 0 on the clipped
/// light-tailed branch and returns +inf when the heavy-tailed base hits zero.
double exp_q(double x, EntropicIndex q);

/// (x^{1-q} - 1)/(1-q), or ln(x) at q = 1. Throws std::domain_error for x <= 0.
double ln_q(double x, EntropicIndex q);

/// Output index q' = (3q - 1)/(q + 1) of Box-Muller variates built with ln_q.
EntropicIndex gbmm_index_map(EntropicIndex q_generator);

/// Generator index q = (q' + 1)/(3 - q') producing variates of index q'.
EntropicIndex gbmm_index_inverse(EntropicIndex q_target);

double log_gamma(double x);
double digamma(double x);

} // namespace qexp
