#include "qexp/policy_heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qexp/deformed_math.hpp"
#include "qexp/samplers.hpp"

namespace qexp {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

bool q_is_gaussian(const PolicyHeadConfig& c) {
    return c.family == PolicyFamily::Gaussian ||
           (c.family == PolicyFamily::QGaussian && EntropicIndex(c.q).is_exp_limit());
}

double center(const PolicyHeadConfig& c, std::size_t i) { return 0.5 * (c.action_high[i] + c.action_low[i]); }
double half_range(const PolicyHeadConfig& c, std::size_t i) { return 0.5 * (c.action_high[i] - c.action_low[i]); }

double squash_unit(const PolicyHeadConfig& c, std::size_t i, double a) {
    const double u = (a - center(c, i)) / half_range(c, i);
    return std::clamp(u, -1.0 + kActionEdge, 1.0 - kActionEdge);
}

double beta_unit(const PolicyHeadConfig& c, std::size_t i, double a) {
    const double x = (a - c.action_low[i]) / (c.action_high[i] - c.action_low[i]);
    return std::clamp(x, kActionEdge, 1.0 - kActionEdge);
}

void check_action(const PolicyHeadConfig& c, std::span<const double> a) {
    if (a.size() != static_cast<std::size_t>(c.action_dim)) {
        throw std::invalid_argument("policy: action dimension mismatch");
    }
}

// Standardized residuals z_i = (a_i - mu_i) / sigma_i; returns sum z_i^2.
double residuals(const PolicyHeadOutput& out, std::span<const double> u, double* z) {
    double m = 0.0;
    for (std::size_t i = 0; i < out.mu.size(); ++i) {
        z[i] = (u[i] - out.mu[i]) / out.sigma[i];
        m += z[i] * z[i];
    }
    return m;
}

double sum_log_sigma(const PolicyHeadOutput& out) {
    double s = 0.0;
    for (double v : out.sigma) s += std::log(v);
    return s;
}

// 1 - (1-q) m / 2, the argument of the q-exponential kernel.
double q_base(double q, double m) { return 1.0 - 0.5 * (1.0 - q) * m; }

constexpr std::size_t kMaxDim = 16;

} // namespace

PolicyFamily parse_policy_family(std::string_view name) {
    if (name == "gaussian") return PolicyFamily::Gaussian;
    if (name == "squashed_gaussian") return PolicyFamily::SquashedGaussian;
    if (name == "beta") return PolicyFamily::Beta;
    if (name == "student_t") return PolicyFamily::StudentT;
    if (name == "q_gaussian") return PolicyFamily::QGaussian;
    throw std::invalid_argument("unknown policy family '" + std::string(name) + "'");
}

std::string_view policy_family_name(PolicyFamily family) {
    switch (family) {
    case PolicyFamily::Gaussian: return "gaussian";
    case PolicyFamily::SquashedGaussian: return "squashed_gaussian";
    case PolicyFamily::Beta: return "beta";
    case PolicyFamily::StudentT: return "student_t";
    case PolicyFamily::QGaussian: return "q_gaussian";
    }
    return "unknown";
}

void PolicyHeadConfig::validate() const {
    if (action_dim < 1 || static_cast<std::size_t>(action_dim) > kMaxDim) {
        throw std::invalid_argument("policy: action_dim must be in [1, 16]");
    }
    if (action_low.size() != static_cast<std::size_t>(action_dim) ||
        action_high.size() != static_cast<std::size_t>(action_dim)) {
        throw std::invalid_argument("policy: action bounds must have action_dim entries");
    }
    for (int i = 0; i < action_dim; ++i) {
        if (!(action_low[i] < action_high[i])) {
            throw std::invalid_argument("policy: action_low must be below action_high");
        }
    }
    if (!(nu_base >= 1.0)) throw std::invalid_argument("policy: nu_base must be >= 1");
    if (replacement_batch < 1) throw std::invalid_argument("policy: replacement_batch must be >= 1");
    if (!(log_std_min < log_std_max)) {
        throw std::invalid_argument("policy: log_std_min must be below log_std_max");
    }
    if (family == PolicyFamily::QGaussian) {
        if (!(q < 3.0)) throw std::invalid_argument("policy: q must be < 3");
        if (q > 1.0 && !EntropicIndex(q).is_exp_limit() && !(1.0 / (q - 1.0) > 0.5 * action_dim)) {
            throw std::invalid_argument("policy: heavy-tailed q-Gaussian not normalizable in this dimension");
        }
    }
}

std::size_t PolicyHeadConfig::raw_size() const {
    const auto n = static_cast<std::size_t>(action_dim);
    return family == PolicyFamily::StudentT ? 2 * n + 1 : 2 * n;
}

bool PolicyHeadConfig::light_tailed() const {
    return family == PolicyFamily::QGaussian && EntropicIndex(q).is_light();
}

PolicyParamGradient::PolicyParamGradient(const PolicyHeadConfig& config) {
    const auto n = static_cast<std::size_t>(config.action_dim);
    if (config.family == PolicyFamily::Beta) {
        alpha.assign(n, 0.0);
        beta.assign(n, 0.0);
    } else {
        mu.assign(n, 0.0);
        sigma.assign(n, 0.0);
    }
}

void PolicyParamGradient::clear() {
    std::fill(mu.begin(), mu.end(), 0.0);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(alpha.begin(), alpha.end(), 0.0);
    std::fill(beta.begin(), beta.end(), 0.0);
    nu = 0.0;
}

PolicyHeadOutput head_forward(const PolicyHeadConfig& config, std::span<const double> raw) {
    if (raw.size() != config.raw_size()) {
        throw std::invalid_argument("head_forward: raw output has the wrong length");
    }
    const auto n = static_cast<std::size_t>(config.action_dim);
    PolicyHeadOutput out;
    out.raw.assign(raw.begin(), raw.end());
    if (config.family == PolicyFamily::Beta) {
        out.alpha.resize(n);
        out.beta.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.alpha[i] = 1.0 + softplus(raw[i]);
            out.beta[i] = 1.0 + softplus(raw[n + i]);
        }
        return out;
    }
    out.mu.resize(n);
    out.sigma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.mu[i] = config.family == PolicyFamily::SquashedGaussian
                        ? raw[i]
                        : center(config, i) + half_range(config, i) * std::tanh(raw[i]);
        out.sigma[i] = std::exp(std::clamp(raw[n + i], config.log_std_min, config.log_std_max));
    }
    if (config.family == PolicyFamily::StudentT) {
        out.nu = config.nu_base + softplus(raw[2 * n]);
    }
    if (config.family == PolicyFamily::QGaussian && !q_is_gaussian(config)) {
        out.log_norm = log_partition_q_gaussian(EntropicIndex(config.q), config.action_dim);
    }
    return out;
}

void head_backward(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                   const PolicyParamGradient& grad, std::span<double> raw_grad) {
    if (raw_grad.size() != config.raw_size() || out.raw.size() != config.raw_size()) {
        throw std::invalid_argument("head_backward: shape mismatch");
    }
    const auto n = static_cast<std::size_t>(config.action_dim);
    const auto& raw = out.raw;
    if (config.family == PolicyFamily::Beta) {
        for (std::size_t i = 0; i < n; ++i) {
            raw_grad[i] = grad.alpha[i] * sigmoid(raw[i]);
            raw_grad[n + i] = grad.beta[i] * sigmoid(raw[n + i]);
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (config.family == PolicyFamily::SquashedGaussian) {
            raw_grad[i] = grad.mu[i];
        } else {
            const double t = std::tanh(raw[i]);
            raw_grad[i] = grad.mu[i] * half_range(config, i) * (1.0 - t * t);
        }
        const double r = raw[n + i];
        const bool inside = r >= config.log_std_min && r <= config.log_std_max;
        raw_grad[n + i] = inside ? grad.sigma[i] * out.sigma[i] : 0.0;
    }
    if (config.family == PolicyFamily::StudentT) {
        raw_grad[2 * n] = grad.nu * sigmoid(raw[2 * n]);
    }
}

std::vector<double> head_backward(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                                  const PolicyParamGradient& grad) {
    std::vector<double> g(config.raw_size(), 0.0);
    head_backward(config, out, grad, g);
    return g;
}

double policy_log_prob(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                       std::span<const double> a) {
    check_action(config, a);
    const auto n = static_cast<std::size_t>(config.action_dim);
    const double dn = static_cast<double>(n);
    double z[kMaxDim];
    switch (config.family) {
    case PolicyFamily::Beta: {
        double lp = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = beta_unit(config, i, a[i]);
            const double al = out.alpha[i];
            const double be = out.beta[i];
            lp += (al - 1.0) * std::log(x) + (be - 1.0) * std::log1p(-x) - log_gamma(al) - log_gamma(be) +
                  log_gamma(al + be) - std::log(config.action_high[i] - config.action_low[i]);
        }
        return lp;
    }
    case PolicyFamily::SquashedGaussian: {
        double u[kMaxDim];
        double jac = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = squash_unit(config, i, a[i]);
            u[i] = std::atanh(s);
            jac += std::log(1.0 - s * s + kSquashEpsilon) + std::log(half_range(config, i));
        }
        const double m = residuals(out, {u, n}, z);
        return -0.5 * m - sum_log_sigma(out) - 0.5 * dn * std::log(2.0 * std::numbers::pi) - jac;
    }
    case PolicyFamily::StudentT: {
        const double m = residuals(out, a, z);
        const double nu = out.nu;
        return log_gamma(0.5 * (nu + dn)) - log_gamma(0.5 * nu) - 0.5 * dn * std::log(nu * std::numbers::pi) -
               sum_log_sigma(out) - 0.5 * (nu + dn) * std::log1p(m / nu);
    }
    case PolicyFamily::Gaussian:
    case PolicyFamily::QGaussian: {
        const double m = residuals(out, a, z);
        if (q_is_gaussian(config)) {
            return -0.5 * m - sum_log_sigma(out) - 0.5 * dn * std::log(2.0 * std::numbers::pi);
        }
        const double base = q_base(config.q, m);
        if (!(base > 0.0)) return -std::numeric_limits<double>::infinity();
        return std::log(base) / (1.0 - config.q) - sum_log_sigma(out) - out.log_norm;
    }
    }
    return 0.0;
}

double policy_accumulate_grad(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                              std::span<const double> a, double weight, PolicyParamGradient& acc) {
    check_action(config, a);
    const auto n = static_cast<std::size_t>(config.action_dim);
    const double dn = static_cast<double>(n);
    if (config.family == PolicyFamily::Beta) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = beta_unit(config, i, a[i]);
            const double psi_sum = digamma(out.alpha[i] + out.beta[i]);
            acc.alpha[i] += weight * (std::log(x) - digamma(out.alpha[i]) + psi_sum);
            acc.beta[i] += weight * (std::log1p(-x) - digamma(out.beta[i]) + psi_sum);
        }
        return policy_log_prob(config, out, a);
    }
    double u[kMaxDim];
    if (config.family == PolicyFamily::SquashedGaussian) {
        for (std::size_t i = 0; i < n; ++i) u[i] = std::atanh(squash_unit(config, i, a[i]));
    } else {
        for (std::size_t i = 0; i < n; ++i) u[i] = a[i];
    }
    double z[kMaxDim];
    const double m = residuals(out, {u, n}, z);
    // Every loc-scale family's gradient is the Gaussian one with the
    // quadratic term reweighted by w = -2 dlogp/dm.
    double w = 1.0;
    if (config.family == PolicyFamily::StudentT) {
        const double nu = out.nu;
        w = (nu + dn) / (nu + m);
        acc.nu += weight * (0.5 * digamma(0.5 * (nu + dn)) - 0.5 * digamma(0.5 * nu) - 0.5 * dn / nu -
                            0.5 * std::log1p(m / nu) + 0.5 * (nu + dn) * m / (nu * (nu + m)));
    } else if (config.family == PolicyFamily::QGaussian && !q_is_gaussian(config)) {
        const double base = q_base(config.q, m);
        if (!(base > 0.0)) {
            throw std::domain_error("policy_accumulate_grad: action outside the q-Gaussian support");
        }
        w = 1.0 / base;
    }
    for (std::size_t i = 0; i < n; ++i) {
        acc.mu[i] += weight * w * z[i] / out.sigma[i];
        acc.sigma[i] += weight * (w * z[i] * z[i] - 1.0) / out.sigma[i];
    }
    return policy_log_prob(config, out, a);
}

bool policy_support_contains(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                             std::span<const double> a) {
    check_action(config, a);
    if (!config.light_tailed()) return true;
    double z[kMaxDim];
    return q_base(config.q, residuals(out, a, z)) > 0.0;
}

std::vector<double> policy_sample(const PolicyHeadConfig& config, const PolicyHeadOutput& out, Rng& rng) {
    const auto n = static_cast<std::size_t>(config.action_dim);
    std::vector<double> a(n);
    switch (config.family) {
    case PolicyFamily::Beta:
        for (std::size_t i = 0; i < n; ++i) {
            const double x = std::clamp(sample_beta_variate(out.alpha[i], out.beta[i], rng), kActionEdge,
                                        1.0 - kActionEdge);
            a[i] = config.action_low[i] + (config.action_high[i] - config.action_low[i]) * x;
        }
        return a;
    case PolicyFamily::SquashedGaussian:
        for (std::size_t i = 0; i < n; ++i) {
            const double s = std::clamp(std::tanh(out.mu[i] + out.sigma[i] * rng.normal()), -1.0 + kActionEdge,
                                        1.0 - kActionEdge);
            a[i] = center(config, i) + half_range(config, i) * s;
        }
        return a;
    case PolicyFamily::StudentT: {
        double z[kMaxDim];
        for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
        const double chi2 = 2.0 * sample_gamma(0.5 * out.nu, rng);
        const double scale = std::sqrt(out.nu / chi2);
        for (std::size_t i = 0; i < n; ++i) a[i] = out.mu[i] + out.sigma[i] * scale * z[i];
        return a;
    }
    case PolicyFamily::Gaussian:
    case PolicyFamily::QGaussian:
        break;
    }
    double z[kMaxDim];
    if (q_is_gaussian(config)) {
        for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
    } else if (config.q < 1.0) {
        const double one_minus_q = 1.0 - config.q;
        const double s = sample_beta_variate(0.5 * static_cast<double>(n), (2.0 - config.q) / one_minus_q, rng);
        // Keep the draw strictly inside the support after rounding.
        const double r = std::sqrt(2.0 * s / one_minus_q) * (1.0 - 1e-12);
        if (n == 1) {
            z[0] = rng.uniform() < 0.5 ? -r : r;
        } else {
            double norm = 0.0;
            do {
                norm = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    z[i] = rng.normal();
                    norm += z[i] * z[i];
                }
            } while (norm == 0.0);
            norm = std::sqrt(norm);
            for (std::size_t i = 0; i < n; ++i) z[i] *= r / norm;
        }
    } else if (n == 1) {
        z[0] = sample_gbmm_standard(EntropicIndex(config.q), rng);
    } else {
        const double qm1 = config.q - 1.0;
        const double nu = 2.0 / qm1 - static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
        const double chi2 = 2.0 * sample_gamma(0.5 * nu, rng);
        const double scale = std::sqrt(2.0 / (qm1 * nu)) * std::sqrt(nu / chi2);
        for (std::size_t i = 0; i < n; ++i) z[i] *= scale;
    }
    for (std::size_t i = 0; i < n; ++i) a[i] = out.mu[i] + out.sigma[i] * z[i];
    return a;
}

std::vector<double> policy_mean_action(const PolicyHeadConfig& config, const PolicyHeadOutput& out) {
    const auto n = static_cast<std::size_t>(config.action_dim);
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (config.family) {
        case PolicyFamily::Beta:
            a[i] = config.action_low[i] +
                   (config.action_high[i] - config.action_low[i]) * out.alpha[i] / (out.alpha[i] + out.beta[i]);
            break;
        case PolicyFamily::SquashedGaussian:
            a[i] = center(config, i) + half_range(config, i) * std::tanh(out.mu[i]);
            break;
        default:
            a[i] = out.mu[i];
            break;
        }
    }
    return a;
}

void policy_mean_action_backward(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                                 std::span<const double> action_grad, PolicyParamGradient& acc) {
    check_action(config, action_grad);
    const auto n = static_cast<std::size_t>(config.action_dim);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = action_grad[i];
        switch (config.family) {
        case PolicyFamily::Beta: {
            const double width = config.action_high[i] - config.action_low[i];
            const double s = out.alpha[i] + out.beta[i];
            acc.alpha[i] += g * width * out.beta[i] / (s * s);
            acc.beta[i] -= g * width * out.alpha[i] / (s * s);
            break;
        }
        case PolicyFamily::SquashedGaussian: {
            const double t = std::tanh(out.mu[i]);
            acc.mu[i] += g * half_range(config, i) * (1.0 - t * t);
            break;
        }
        default:
            acc.mu[i] += g;
            break;
        }
    }
}

ReplacementResult log_prob_with_replacement(const PolicyHeadConfig& config, const PolicyHeadOutput& out,
                                            std::span<const double> a, Rng& rng) {
    ReplacementResult result;
    if (policy_support_contains(config, out, a)) {
        result.action.assign(a.begin(), a.end());
        result.log_prob = policy_log_prob(config, out, a);
        return result;
    }
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < config.replacement_batch; ++k) {
        auto candidate = policy_sample(config, out, rng);
        double d = 0.0;
        for (std::size_t i = 0; i < candidate.size(); ++i) d += (candidate[i] - a[i]) * (candidate[i] - a[i]);
        if (d < best) {
            best = d;
            result.action = std::move(candidate);
        }
    }
    result.replaced = true;
    result.log_prob = policy_log_prob(config, out, result.action);
    return result;
}

LocScaleParams to_loc_scale(const PolicyHeadOutput& out) {
    Vector mu = Eigen::Map<const Vector>(out.mu.data(), static_cast<Eigen::Index>(out.mu.size()));
    Vector sigma = Eigen::Map<const Vector>(out.sigma.data(), static_cast<Eigen::Index>(out.sigma.size()));
    return LocScaleParams::diagonal(std::move(mu), sigma);
}

StudentTParams to_student_t(const PolicyHeadOutput& out) { return {to_loc_scale(out), out.nu}; }

QGaussianParams to_q_gaussian(const PolicyHeadConfig& config, const PolicyHeadOutput& out) {
    return {to_loc_scale(out), EntropicIndex(config.q)};
}

BetaParams to_beta(const PolicyHeadConfig& config, const PolicyHeadOutput& out) {
    const auto n = static_cast<Eigen::Index>(config.action_dim);
    BetaParams p;
    p.alpha = Eigen::Map<const Vector>(out.alpha.data(), n);
    p.beta = Eigen::Map<const Vector>(out.beta.data(), n);
    p.action_low = Eigen::Map<const Vector>(config.action_low.data(), n);
    p.action_high = Eigen::Map<const Vector>(config.action_high.data(), n);
    return p;
}

} // namespace qexp
