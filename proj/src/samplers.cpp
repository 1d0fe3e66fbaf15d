#include "qexp/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qexp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

double clamp_open_unit(double x) {
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(x, -hi, hi);
}

} // namespace

Rng::Rng(std::uint64_t seed) : engine_(seeded_engine(seed)) {}

Rng Rng::derive(std::uint64_t run, std::uint64_t seed, StreamPurpose purpose) {
    std::uint64_t h = splitmix64(run);
    h = splitmix64(h ^ seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    return Rng(h);
}

Rng Rng::split(std::uint64_t tag) { return Rng(splitmix64(engine_() ^ splitmix64(tag))); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

std::size_t Rng::index(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("Rng::index: empty range");
    }
    // Lemire's nearly-divisionless bounded draw.
    const std::uint64_t range = n;
    __uint128_t m = static_cast<__uint128_t>(engine_()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
        const std::uint64_t threshold = -range % range;
        while (low < threshold) {
            m = static_cast<__uint128_t>(engine_()) * range;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

double Rng::normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double sample_gbmm_standard(EntropicIndex q_target, Rng& rng) {
    if (!(q_target.value() < 3.0)) {
        throw std::domain_error("sample_gbmm_standard: q must be < 3");
    }
    const EntropicIndex q_gen = gbmm_index_inverse(q_target);
    const double u1 = rng.uniform_open();
    const double u2 = rng.uniform();
    const double radius = std::sqrt(-2.0 * ln_q(u1, q_gen));
    // Box-Muller with ln_q yields density prop. to exp_q(-z^2/(3-q)); rescale
    // to the exp_q(-z^2/2) convention of the densities.
    const double to_unit = std::sqrt(2.0 / (3.0 - q_target.value()));
    return to_unit * radius * std::cos(2.0 * std::numbers::pi * u2);
}

Vector sample_q_gaussian_gbmm(const QGaussianParams& params, Rng& rng) {
    const auto& ls = params.loc_scale;
    Vector z(ls.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = sample_gbmm_standard(params.q, rng);
    }
    return ls.mu() + ls.scale_chol() * z;
}

Vector sample_stochastic_rep(const QGaussianParams& params, Rng& rng) {
    if (!params.q.is_light()) {
        throw std::domain_error("sample_stochastic_rep: requires q < 1");
    }
    const auto& ls = params.loc_scale;
    const auto n = static_cast<int>(ls.dim());
    const double one_minus_q = 1.0 - params.q.value();
    const double ratio = sample_beta_variate(0.5 * n, (2.0 - params.q.value()) / one_minus_q, rng);
    const double support_radius_sq = 2.0 / one_minus_q;
    const double r = std::sqrt(ratio * support_radius_sq);
    const SphereSample dir = sample_uniform_sphere(n, rng);
    return ls.mu() + ls.scale_chol() * (r * dir.u);
}

Vector sample_q_gaussian(const QGaussianParams& params, Rng& rng) {
    const auto& ls = params.loc_scale;
    if (params.q.is_exp_limit()) {
        return sample_gaussian(ls, rng);
    }
    if (params.q.is_light()) {
        return sample_stochastic_rep(params, rng);
    }
    if (!(params.q.value() < 3.0)) {
        throw std::domain_error("sample_q_gaussian: q must be < 3");
    }
    if (ls.dim() == 1) {
        return sample_q_gaussian_gbmm(params, rng);
    }
    // Heavy tails in N > 1: multivariate t with nu = 2/(q-1) - N and scale
    // 2 Sigma / ((q-1) nu).
    const double qm1 = params.q.value() - 1.0;
    const double nu = 2.0 / qm1 - static_cast<double>(ls.dim());
    if (!(nu > 0.0)) {
        throw std::domain_error("sample_q_gaussian: heavy tail not integrable in this dimension");
    }
    Vector z(ls.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    const double chi2 = 2.0 * sample_gamma(0.5 * nu, rng);
    const double scale = std::sqrt(2.0 / (qm1 * nu)) * std::sqrt(nu / chi2);
    return ls.mu() + ls.scale_chol() * (scale * z);
}

SphereSample sample_uniform_sphere(int dim, Rng& rng) {
    if (dim < 1) {
        throw std::invalid_argument("sample_uniform_sphere: dimension must be >= 1");
    }
    Vector u(dim);
    if (dim == 1) {
        u[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
        return {u};
    }
    double norm = 0.0;
    do {
        for (int i = 0; i < dim; ++i) u[i] = rng.normal();
        norm = u.norm();
    } while (norm == 0.0);
    u /= norm;
    return {u};
}

Vector sample_gaussian(const LocScaleParams& params, Rng& rng) {
    Vector z(params.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return params.mu() + params.scale_chol() * z;
}

Vector sample_squashed_gaussian(const LocScaleParams& params, Rng& rng) {
    Vector u = sample_gaussian(params, rng);
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = clamp_open_unit(std::tanh(u[i]));
    return u;
}

Vector sample_student_t(const StudentTParams& params, Rng& rng) {
    const auto& ls = params.loc_scale;
    Vector z(ls.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    const double chi2 = 2.0 * sample_gamma(0.5 * params.nu, rng);
    return ls.mu() + ls.scale_chol() * (std::sqrt(params.nu / chi2) * z);
}

Vector sample_beta(const BetaParams& params, Rng& rng) {
    params.validate();
    Vector a(params.dim());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double lo = params.action_low[i];
        const double hi = params.action_high[i];
        const double x = sample_beta_variate(params.alpha[i], params.beta[i], rng);
        a[i] = std::clamp(lo + (hi - lo) * x, std::nextafter(lo, hi), std::nextafter(hi, lo));
    }
    return a;
}

double sample_gamma(double shape, Rng& rng) {
    if (!(shape > 0.0)) {
        throw std::invalid_argument("sample_gamma: shape must be positive");
    }
    if (shape < 1.0) {
        // Boost to shape + 1, then scale by U^{1/shape}.
        const double g = sample_gamma(shape + 1.0, rng);
        return g * std::pow(rng.uniform_open(), 1.0 / shape);
    }
    // Marsaglia and Tsang.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double sample_beta_variate(double a, double b, Rng& rng) {
    const double x = sample_gamma(a, rng);
    const double y = sample_gamma(b, rng);
    const double r = x / (x + y);
    return std::clamp(r, 0x1.0p-60, std::nextafter(1.0, 0.0));
}

} // namespace qexp
