#pragma once

// Self-check suites run by `qexp validate` and the acceptance tests. Each
// check compares library output against an oracle and reports the worst
// deviation seen.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qexp {

struct ValidationCheck {
    std::string suite;
    std::string name;
    /// Worst observed deviation (or test statistic).
    double value = 0.0;
    /// Pass iff value < tolerance.
    double tolerance = 0.0;
    bool pass = false;
};

struct ValidationOptions {
    std::uint64_t seed = 20240517;
    int density_draws = 50;
    std::size_t monte_carlo_draws = 1000000;
    int gradient_instances = 100;
    std::size_t sampler_draws = 100000;
    int sparsemax_vectors = 1000;
    int critic_updates = 10000;
};

/// math, density, gradient, sampler, sparsemax, equivalence, critic.
const std::vector<std::string>& validation_suites();

/// Throws std::invalid_argument for an unknown suite.
std::vector<ValidationCheck> run_validation_suite(std::string_view suite, const ValidationOptions& options);

/// CSV with header suite,check,value,tolerance,pass.
void write_validation_csv(std::ostream& out, const std::vector<ValidationCheck>& checks);

} // namespace qexp
