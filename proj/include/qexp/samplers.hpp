#pragma once

// Exact random-variate generation for every policy family.

#include <cstdint>
#include <limits>
#include <random>

#include "qexp/distributions.hpp"

namespace qexp {

/// Stream purposes; together with run id and seed they identify an
/// independent generator stream.
enum class StreamPurpose : std::uint64_t {
    Init = 1,
    Actor = 2,
    Environment = 3,
    Evaluation = 4,
    Replay = 5,
    Dataset = 6,
    Oracle = 7,
    Cli = 8,
};

/// Seedable 64-bit generator. Identical seed gives an identical stream.
/// Single owner; not safe to share between threads.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    /// Independent stream for a (run, seed, purpose) triple.
    static Rng derive(std::uint64_t run, std::uint64_t seed, StreamPurpose purpose);
    /// Child stream keyed by an arbitrary tag; advances this generator once.
    Rng split(std::uint64_t tag);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return engine_(); }

    /// [0, 1)
    double uniform();
    /// (0, 1), never exactly 0 or 1.
    double uniform_open();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    /// Standard normal via Box-Muller.
    double normal();

private:
    std::mt19937_64 engine_;
};

struct SphereSample {
    Vector u;
};

/// One standard 1-D q-Gaussian variate (density prop. to exp_q(-z^2/2)) by the
/// generalized Box-Muller method. Throws std::domain_error at q_target >= 3.
double sample_gbmm_standard(EntropicIndex q_target, Rng& rng);

/// Default q-Gaussian sampler: stochastic representation for q < 1, Box-Muller
/// for 1-D heavy tails and the multivariate-t representation for N > 1 heavy tails.
Vector sample_q_gaussian(const QGaussianParams& params, Rng& rng);

/// mu + L z with z drawn componentwise by sample_gbmm_standard. Exact for
/// N = 1 only; a diagonal Sigma does not factorize a q-Gaussian.
Vector sample_q_gaussian_gbmm(const QGaussianParams& params, Rng& rng);

/// Light-tailed q-Gaussian: mu + L u r with r^2 (1-q)/2 ~ Beta(N/2, (2-q)/(1-q)).
/// Throws std::domain_error for q >= 1.
Vector sample_stochastic_rep(const QGaussianParams& params, Rng& rng);

SphereSample sample_uniform_sphere(int dim, Rng& rng);

Vector sample_gaussian(const LocScaleParams& params, Rng& rng);
/// tanh of a Gaussian draw, kept strictly inside (-1, 1).
Vector sample_squashed_gaussian(const LocScaleParams& params, Rng& rng);
Vector sample_student_t(const StudentTParams& params, Rng& rng);
/// Draw in (action_low, action_high), strictly inside.
Vector sample_beta(const BetaParams& params, Rng& rng);

double sample_gamma(double shape, Rng& rng);
double sample_beta_variate(double a, double b, Rng& rng);

} // namespace qexp
