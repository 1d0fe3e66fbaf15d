#pragma once

// Numerical ground truth for tests and the validate command. Nothing here
// calls the density, sampler or gradient code it is used to check.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qexp {
class Rng;
}

namespace qexp::oracles {

using ScalarFunction = std::function<double(double)>;
using VectorFunction = std::function<double(std::span<const double>)>;

struct QuadratureSpec {
    ScalarFunction integrand;
    /// Either bound may be infinite.
    double lower = 0.0;
    double upper = 1.0;
    double abs_tolerance = 1e-10;
    unsigned max_depth = 20;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = false;
};

/// Adaptive 31-point Gauss-Kronrod. Throws std::invalid_argument for a
/// non-positive tolerance or reversed bounds.
QuadratureResult integrate_adaptive(const QuadratureSpec& spec);

/// Central differences per coordinate. Throws std::domain_error when f is
/// not finite at an offset point.
std::vector<double> finite_diff_gradient(const VectorFunction& f, std::span<const double> x, double step = 1e-5);

/// argmin over the probability simplex of |p - v|_2 by enumerating every
/// active set. Throws std::invalid_argument for length 0 or > 12.
std::vector<double> project_simplex_bruteforce(std::span<const double> v);

struct FitTestResult {
    double statistic = 0.0;
    double threshold = 0.0;
    std::size_t sample_size = 0;
    bool pass = false;
};

inline constexpr std::size_t kMinFitSamples = 1000;
/// KS critical constant; 1.95 / sqrt(n) is about alpha = 0.001.
inline constexpr double kKsConstant = 1.95;
inline constexpr double kChi2Alpha = 0.001;

/// One-sample Kolmogorov-Smirnov against a CDF. Throws std::invalid_argument
/// for fewer than kMinFitSamples samples.
FitTestResult ks_test(std::vector<double> samples, const ScalarFunction& cdf);

/// KS against the CDF obtained by integrating density from `lower`
/// between consecutive sorted samples.
FitTestResult ks_test_density(std::vector<double> samples, const ScalarFunction& density, double lower);

/// Two-sample KS with threshold kKsConstant * sqrt((n + m) / (n m)).
FitTestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Pearson chi-square over `bins` equal-width bins on [lo, hi] plus the two
/// tails, expected counts by quadrature of density; threshold is the
/// 1 - kChi2Alpha quantile with bins + 1 degrees of freedom.
FitTestResult chi2_test(const std::vector<double>& samples, const ScalarFunction& density, double lo, double hi,
                        int bins);

/// Mean of density(x) / proposal_density(x) over n proposal draws.
double monte_carlo_normalization(const VectorFunction& density,
                                 const std::function<std::vector<double>(Rng&)>& proposal_sample,
                                 const VectorFunction& proposal_density, std::size_t n, Rng& rng);

} // namespace qexp::oracles
