#include "qexp/oracles.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qexp/samplers.hpp"

namespace qexp::oracles {

namespace {

FitTestResult make_result(double statistic, double threshold, std::size_t n) {
    return {statistic, threshold, n, statistic < threshold};
}

void require_samples(std::size_t n) {
    if (n < kMinFitSamples) {
        throw std::invalid_argument("fit test needs at least 1000 samples");
    }
}

} // namespace

QuadratureResult integrate_adaptive(const QuadratureSpec& spec) {
    if (!(spec.abs_tolerance > 0.0)) {
        throw std::invalid_argument("integrate_adaptive: tolerance must be positive");
    }
    if (!(spec.lower <= spec.upper)) {
        throw std::invalid_argument("integrate_adaptive: lower bound above upper bound");
    }
    QuadratureResult r;
    if (spec.lower == spec.upper) {
        r.converged = true;
        return r;
    }
    double error = 0.0;
    double l1 = 0.0;
    const bool lower_inf = std::isinf(spec.lower);
    const bool upper_inf = std::isinf(spec.upper);
    // Double-exponential rules for infinite ranges cope with power-law tails.
    if (lower_inf && upper_inf) {
        boost::math::quadrature::sinh_sinh<double> rule;
        r.value = rule.integrate(spec.integrand, spec.abs_tolerance, &error, &l1);
    } else if (lower_inf || upper_inf) {
        boost::math::quadrature::exp_sinh<double> rule;
        std::size_t levels = 0;
        r.value = rule.integrate(spec.integrand, spec.lower, spec.upper, spec.abs_tolerance, &error, &l1, &levels);
    } else {
        r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            spec.integrand, spec.lower, spec.upper, spec.max_depth, spec.abs_tolerance, &error, &l1);
    }
    r.error_estimate = error;
    r.converged = std::isfinite(r.value) && error <= spec.abs_tolerance;
    return r;
}

std::vector<double> finite_diff_gradient(const VectorFunction& f, std::span<const double> x, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_gradient: step must be positive");
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = point[i];
        point[i] = orig + step;
        const double fp = f(point);
        point[i] = orig - step;
        const double fm = f(point);
        point[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::domain_error("finite_diff_gradient: function not finite near the point");
        }
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

std::vector<double> project_simplex_bruteforce(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0 || n > 12) {
        throw std::invalid_argument("project_simplex_bruteforce: length must be in [1, 12]");
    }
    std::vector<double> best;
    double best_dist = std::numeric_limits<double>::infinity();
    std::vector<double> p(n);
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                sum += v[i];
                ++count;
            }
        }
        const double theta = (sum - 1.0) / count;
        bool feasible = true;
        double dist = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = (mask & (1u << i)) ? v[i] - theta : 0.0;
            if (p[i] < 0.0) feasible = false;
            dist += (p[i] - v[i]) * (p[i] - v[i]);
        }
        if (feasible && dist < best_dist) {
            best_dist = dist;
            best = p;
        }
    }
    return best;
}

FitTestResult ks_test(std::vector<double> samples, const ScalarFunction& cdf) {
    require_samples(samples.size());
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return make_result(d, kKsConstant / std::sqrt(n), samples.size());
}

FitTestResult ks_test_density(std::vector<double> samples, const ScalarFunction& density, double lower) {
    require_samples(samples.size());
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double cumulative = 0.0;
    double prev = lower;
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i] > prev) {
            // Boost's recursion test compares an unscaled error estimate with a
            // width-scaled tolerance, so short intervals would always bisect
            // to max depth. A single 15-point pass is already exact there.
            const unsigned depth = samples[i] - prev < 1e-2 ? 0 : 10;
            cumulative += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(density, prev, samples[i],
                                                                                        depth, 1e-12);
            prev = samples[i];
        }
        d = std::max({d, cumulative - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cumulative});
    }
    return make_result(d, kKsConstant / std::sqrt(n), samples.size());
}

FitTestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    require_samples(a.size());
    require_samples(b.size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return make_result(d, kKsConstant * std::sqrt((na + nb) / (na * nb)), a.size() + b.size());
}

FitTestResult chi2_test(const std::vector<double>& samples, const ScalarFunction& density, double lo, double hi,
                        int bins) {
    require_samples(samples.size());
    if (bins < 2 || !(lo < hi)) throw std::invalid_argument("chi2_test: need bins >= 2 and lo < hi");
    const auto total_bins = static_cast<std::size_t>(bins) + 2;
    std::vector<double> observed(total_bins, 0.0);
    const double width = (hi - lo) / bins;
    for (double x : samples) {
        std::size_t k;
        if (x < lo) {
            k = 0;
        } else if (x >= hi) {
            k = total_bins - 1;
        } else {
            k = 1 + std::min(static_cast<std::size_t>((x - lo) / width), static_cast<std::size_t>(bins - 1));
        }
        observed[k] += 1.0;
    }
    auto mass = [&](double a, double b) {
        return integrate_adaptive({density, a, b, 1e-9, 20}).value;
    };
    const double n = static_cast<double>(samples.size());
    double stat = 0.0;
    for (std::size_t k = 0; k < total_bins; ++k) {
        double p;
        if (k == 0) {
            p = mass(-std::numeric_limits<double>::infinity(), lo);
        } else if (k == total_bins - 1) {
            p = mass(hi, std::numeric_limits<double>::infinity());
        } else {
            p = mass(lo + static_cast<double>(k - 1) * width, lo + static_cast<double>(k) * width);
        }
        const double expected = n * p;
        if (expected <= 0.0) {
            if (observed[k] > 0.0) stat = std::numeric_limits<double>::infinity();
            continue;
        }
        stat += (observed[k] - expected) * (observed[k] - expected) / expected;
    }
    const boost::math::chi_squared dist(static_cast<double>(total_bins - 1));
    return make_result(stat, boost::math::quantile(dist, 1.0 - kChi2Alpha), samples.size());
}

double monte_carlo_normalization(const VectorFunction& density,
                                 const std::function<std::vector<double>(Rng&)>& proposal_sample,
                                 const VectorFunction& proposal_density, std::size_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("monte_carlo_normalization: n must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = proposal_sample(rng);
        sum += density(x) / proposal_density(x);
    }
    return sum / static_cast<double>(n);
}

} // namespace qexp::oracles
