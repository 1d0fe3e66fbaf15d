#include "qexp/deformed_math.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace qexp {

double exp_q(double x, EntropicIndex q) {
    if (q.is_exp_limit()) {
        return std::exp(x);
    }
    const double one_minus_q = 1.0 - q.value();
    const double base = 1.0 + one_minus_q * x;
    if (base <= 0.0) {
        return one_minus_q > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    // exp(log1p(.)/(1-q)) keeps precision close to q = 1.
    return std::exp(std::log1p(one_minus_q * x) / one_minus_q);
}

double ln_q(double x, EntropicIndex q) {
    if (!(x > 0.0)) {
        throw std::domain_error("ln_q: argument must be positive");
    }
    if (q.is_exp_limit()) {
        return std::log(x);
    }
    const double one_minus_q = 1.0 - q.value();
    return std::expm1(one_minus_q * std::log(x)) / one_minus_q;
}

EntropicIndex gbmm_index_map(EntropicIndex q_generator) {
    const double q = q_generator.value();
    if (q == -1.0) {
        throw std::domain_error("gbmm_index_map: undefined at q = -1");
    }
    return EntropicIndex{(3.0 * q - 1.0) / (q + 1.0)};
}

EntropicIndex gbmm_index_inverse(EntropicIndex q_target) {
    const double qp = q_target.value();
    if (!(qp < 3.0)) {
        throw std::domain_error("gbmm_index_inverse: target index must be < 3");
    }
    return EntropicIndex{(qp + 1.0) / (3.0 - qp)};
}

double log_gamma(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("log_gamma: argument must be positive");
    }
    return boost::math::lgamma(x);
}

double digamma(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("digamma: argument must be positive");
    }
    return boost::math::digamma(x);
}

} // namespace qexp
