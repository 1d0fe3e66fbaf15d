#pragma once

// Maps raw network outputs to distribution parameters and exposes sampling,
// log-likelihood and gradients for trained (diagonal-scale) policies.
//
// Raw layout: loc-scale families take [mu_raw(N), log_std_raw(N)], Student's t
// appends one nu_raw, Beta takes [alpha_raw(N), beta_raw(N)].
//
// Loc-scale means are tanh-scaled into the action bounds; sampled actions may
// leave the bounds and are clipped by the environment, so log-probabilities
// are always of the unclipped action. Squashed-Gaussian and Beta actions are
// pulled kActionEdge inside the bounds before evaluation.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qexp/distributions.hpp"

namespace qexp {

class Rng;

enum class PolicyFamily { Gaussian, SquashedGaussian, Beta, StudentT, QGaussian };

/// Throws std::invalid_argument on an unknown name.
PolicyFamily parse_policy_family(std::string_view name);
std::string_view policy_family_name(PolicyFamily family);

inline constexpr double kActionEdge = 1e-6;

struct PolicyHeadConfig {
    PolicyFamily family = PolicyFamily::Gaussian;
    double q = 0.0;
    int action_dim = 1;
    std::vector<double> action_low{-1.0};
    std::vector<double> action_high{1.0};
    double nu_base = 1.0;
    int replacement_batch = 32;
    double log_std_min = -10.0;
    double log_std_max = 2.0;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
    std::size_t raw_size() const;
    /// q-Gaussian with bounded support.
    bool light_tailed() const;
};

struct PolicyHeadOutput {
    std::vector<double> raw;
    std::vector<double> mu;     // loc-scale families
    std::vector<double> sigma;  // loc-scale families, per-dimension std
    double nu = 0.0;            // Student's t
    std::vector<double> alpha;  // Beta
    std::vector<double> beta;   // Beta
    double log_norm = 0.0;      // q-Gaussian log-partition for Sigma = I
};

/// Gradient with respect to the distribution parameters of one head output.
struct PolicyParamGradient {
    std::vector<double> mu;
    std::vector<double> sigma;
    double nu = 0.0;
    std::vector<double> alpha;
    std::vector<double> beta;

    PolicyParamGradient() = default;
    explicit PolicyParamGradient(const PolicyHeadConfig& config);
    void clear();
};

PolicyHeadOutput head_forward(const PolicyHeadConfig& config, std::span<const double> raw);

/// Chain rule from parameter gradients to raw outputs; writes raw_size() values.
void head_backward(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                   const PolicyParamGradient& grad, std::span<double> raw_grad);
std::vector<double> head_backward(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                                  const PolicyParamGradient& grad);

/// Log-density of an (unclipped) action; -infinity outside a light-tailed support.
double policy_log_prob(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                       std::span<const double> a);

/// Adds weight * grad log pi(a) to acc and returns log pi(a). Throws
/// std::domain_error outside a light-tailed support.
double policy_accumulate_grad(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                              std::span<const double> a, double weight, PolicyParamGradient& acc);

bool policy_support_contains(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                             std::span<const double> a);

std::vector<double> policy_sample(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                                  Rng& rng);

/// Deterministic action: the mean for loc-scale and Beta families, tanh of
/// the mean for the squashed Gaussian.
std::vector<double> policy_mean_action(const PolicyHeadConfig& config, const PolicyHeadOutput& out);

/// Adds the pullback of dL/d(mean action) to acc.
void policy_mean_action_backward(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                                 std::span<const double> action_grad, PolicyParamGradient& acc);

struct ReplacementResult {
    double log_prob = 0.0;
    std::vector<double> action;
    bool replaced = false;
};

/// For light-tailed q-Gaussians, an out-of-support action is replaced by the
/// L2-nearest of replacement_batch on-policy draws. Other families pass through.
ReplacementResult log_prob_with_replacement(const PolicyHeadConfig& config,
                                            const PolicyHeadOutput& out, std::span<const double> a,
                                            Rng& rng);

/// Full-covariance views for cross-checking against the reference densities.
LocScaleParams to_loc_scale(const PolicyHeadOutput& out);
StudentTParams to_student_t(const PolicyHeadOutput& out);
QGaussianParams to_q_gaussian(const PolicyHeadConfig& config, const PolicyHeadOutput& out);
BetaParams to_beta(const PolicyHeadConfig& config, const PolicyHeadOutput& out);

} // namespace qexp
