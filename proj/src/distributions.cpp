#include "qexp/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qexp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_dim(const LocScaleParams& p, const Vector& a) {
    if (a.size() != p.dim()) {
        throw std::invalid_argument("action dimension does not match parameters");
    }
}

Matrix outer(const Vector& v) { return v * v.transpose(); }

} // namespace

LocScaleParams::LocScaleParams(Vector mu, Matrix scale_chol)
    : mu_(std::move(mu)), chol_(std::move(scale_chol)) {
    const auto n = mu_.size();
    if (n < 1 || chol_.rows() != n || chol_.cols() != n) {
        throw std::invalid_argument("LocScaleParams: scale factor must be N x N with N >= 1");
    }
    diagonal_ = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(chol_(i, i) > 0.0) || !std::isfinite(chol_(i, i))) {
            throw std::invalid_argument("LocScaleParams: Cholesky diagonal must be positive");
        }
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (chol_(i, j) != 0.0) {
                throw std::invalid_argument("LocScaleParams: scale factor must be lower triangular");
            }
        }
        for (Eigen::Index j = 0; j < i; ++j) {
            if (chol_(i, j) != 0.0) diagonal_ = false;
        }
    }
}

LocScaleParams LocScaleParams::diagonal(Vector mu, const Vector& sigma) {
    Matrix l = sigma.asDiagonal();
    return LocScaleParams(std::move(mu), std::move(l));
}

LocScaleParams LocScaleParams::from_covariance(Vector mu, const Matrix& sigma) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("LocScaleParams: covariance is not positive definite");
    }
    Matrix l = llt.matrixL();
    return LocScaleParams(std::move(mu), std::move(l));
}

Matrix LocScaleParams::covariance() const { return chol_ * chol_.transpose(); }

Matrix LocScaleParams::precision() const {
    const auto n = dim();
    Matrix linv = chol_.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    return linv.transpose() * linv;
}

double LocScaleParams::log_det_sigma() const {
    return 2.0 * chol_.diagonal().array().log().sum();
}

Vector LocScaleParams::whiten(const Vector& a) const {
    Vector d = a - mu_;
    if (diagonal_) {
        return d.cwiseQuotient(chol_.diagonal());
    }
    return chol_.triangularView<Eigen::Lower>().solve(d);
}

double LocScaleParams::mahalanobis_sq(const Vector& a) const { return whiten(a).squaredNorm(); }

Vector LocScaleParams::precision_times_residual(const Vector& a) const {
    Vector z = whiten(a);
    if (diagonal_) {
        return z.cwiseQuotient(chol_.diagonal());
    }
    return chol_.transpose().triangularView<Eigen::Upper>().solve(z);
}

void BetaParams::validate() const {
    const auto n = alpha.size();
    if (n < 1 || beta.size() != n || action_low.size() != n || action_high.size() != n) {
        throw std::invalid_argument("BetaParams: inconsistent dimensions");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(alpha[i] > 1.0) || !(beta[i] > 1.0)) {
            throw std::invalid_argument("BetaParams: alpha and beta must exceed 1");
        }
        if (!(action_low[i] < action_high[i])) {
            throw std::invalid_argument("BetaParams: action_low must be below action_high");
        }
    }
}

// Gaussian -------------------------------------------------------------------

double log_prob_gaussian(const LocScaleParams& params, const Vector& a) {
    check_dim(params, a);
    const double n = static_cast<double>(params.dim());
    return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * params.log_det_sigma() -
           0.5 * params.mahalanobis_sq(a);
}

LocScaleGradient grad_log_prob_gaussian(const LocScaleParams& params, const Vector& a) {
    check_dim(params, a);
    Vector s = params.precision_times_residual(a);
    return {s, -0.5 * (params.precision() - outer(s))};
}

// Squashed Gaussian ----------------------------------------------------------

namespace {

Vector unsquash(const Vector& a) {
    Vector u(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (!(std::abs(a[i]) < 1.0)) {
            throw std::domain_error("squashed Gaussian: action outside (-1, 1)");
        }
        u[i] = std::atanh(a[i]);
    }
    return u;
}

} // namespace

double log_prob_squashed_gaussian(const LocScaleParams& params, const Vector& a) {
    check_dim(params, a);
    const Vector u = unsquash(a);
    double jac = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        jac += std::log(1.0 - a[i] * a[i] + kSquashEpsilon);
    }
    return log_prob_gaussian(params, u) - jac;
}

LocScaleGradient grad_log_prob_squashed_gaussian(const LocScaleParams& params, const Vector& a) {
    check_dim(params, a);
    return grad_log_prob_gaussian(params, unsquash(a));
}

// Student's t ----------------------------------------------------------------

double log_prob_student_t(const StudentTParams& params, const Vector& a) {
    const auto& ls = params.loc_scale;
    check_dim(ls, a);
    const double n = static_cast<double>(ls.dim());
    const double nu = params.nu;
    const double m = ls.mahalanobis_sq(a);
    return log_gamma(0.5 * (n + nu)) - log_gamma(0.5 * nu) - 0.5 * n * std::log(nu * std::numbers::pi) -
           0.5 * ls.log_det_sigma() - 0.5 * (n + nu) * std::log1p(m / nu);
}

StudentTGradient grad_log_prob_student_t(const StudentTParams& params, const Vector& a) {
    const auto& ls = params.loc_scale;
    check_dim(ls, a);
    const double n = static_cast<double>(ls.dim());
    const double nu = params.nu;
    const double m = ls.mahalanobis_sq(a);
    const double w = (n + nu) / (nu + m);
    Vector s = ls.precision_times_residual(a);
    StudentTGradient g;
    g.mu = w * s;
    g.sigma = -0.5 * (ls.precision() - w * outer(s));
    g.nu = 0.5 * digamma(0.5 * (n + nu)) - 0.5 * digamma(0.5 * nu) - n / (2.0 * nu) -
           0.5 * std::log1p(m / nu) + 0.5 * (n + nu) * m / (nu * (nu + m));
    return g;
}

// q-Gaussian -----------------------------------------------------------------

double log_partition_q_gaussian(EntropicIndex q, int dim) {
    if (dim < 1) {
        throw std::invalid_argument("log_partition_q_gaussian: dimension must be >= 1");
    }
    const double n = static_cast<double>(dim);
    if (q.is_exp_limit()) {
        return 0.5 * n * std::log(2.0 * std::numbers::pi);
    }
    const double qv = q.value();
    if (!(qv < 3.0)) {
        throw std::domain_error("q-Gaussian is not integrable for q >= 3");
    }
    if (qv < 1.0) {
        const double p = 1.0 / (1.0 - qv);
        return 0.5 * n * std::log(2.0 * std::numbers::pi / (1.0 - qv)) + log_gamma(p + 1.0) -
               log_gamma(p + 1.0 + 0.5 * n);
    }
    const double p = 1.0 / (qv - 1.0);
    if (!(p > 0.5 * n)) {
        throw std::domain_error("heavy-tailed q-Gaussian is not integrable in this dimension");
    }
    return 0.5 * n * std::log(2.0 * std::numbers::pi / (qv - 1.0)) + log_gamma(p - 0.5 * n) -
           log_gamma(p);
}

double partition_q_gaussian(double sigma, EntropicIndex q, int dim) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("partition_q_gaussian: sigma must be positive");
    }
    return std::exp(log_partition_q_gaussian(q, dim) + static_cast<double>(dim) * std::log(sigma));
}

namespace {

// ln exp_q(-m/2), -inf once the light-tailed base clips.
double log_exp_q_neg_half(double m, EntropicIndex q) {
    if (q.is_exp_limit()) {
        return -0.5 * m;
    }
    const double one_minus_q = 1.0 - q.value();
    const double base = 1.0 - 0.5 * one_minus_q * m;
    if (!(base > 0.0)) {
        return kNegInf;
    }
    return std::log1p(-0.5 * one_minus_q * m) / one_minus_q;
}

} // namespace

double log_prob_q_gaussian(const QGaussianParams& params, const Vector& a) {
    const auto& ls = params.loc_scale;
    check_dim(ls, a);
    const double m = ls.mahalanobis_sq(a);
    const double kernel = log_exp_q_neg_half(m, params.q);
    if (kernel == kNegInf) {
        return kNegInf;
    }
    return kernel - log_partition_q_gaussian(params.q, static_cast<int>(ls.dim())) -
           0.5 * ls.log_det_sigma();
}

LocScaleGradient grad_log_prob_q_gaussian(const QGaussianParams& params, const Vector& a) {
    const auto& ls = params.loc_scale;
    check_dim(ls, a);
    const double m = ls.mahalanobis_sq(a);
    double scale = 1.0;
    if (!params.q.is_exp_limit()) {
        // exp_q(-m/2)^{1-q} = 1 - (1-q) m / 2
        const double base = 1.0 - 0.5 * (1.0 - params.q.value()) * m;
        if (!(base > 0.0)) {
            throw std::domain_error("q-Gaussian gradient undefined outside the support");
        }
        scale = 1.0 / base;
    }
    Vector s = ls.precision_times_residual(a);
    return {scale * s, -0.5 * (ls.precision() - scale * outer(s))};
}

bool support_contains(const QGaussianParams& params, const Vector& a) {
    check_dim(params.loc_scale, a);
    if (!params.q.is_light()) {
        return true;
    }
    return params.loc_scale.mahalanobis_sq(a) < 2.0 / (1.0 - params.q.value());
}

// Beta -----------------------------------------------------------------------

namespace {

Vector beta_unit_position(const BetaParams& params, const Vector& a) {
    params.validate();
    if (a.size() != params.dim()) {
        throw std::invalid_argument("Beta: action dimension does not match parameters");
    }
    Vector x(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (!(a[i] > params.action_low[i] && a[i] < params.action_high[i])) {
            throw std::domain_error("Beta: action outside the open support");
        }
        x[i] = (a[i] - params.action_low[i]) / (params.action_high[i] - params.action_low[i]);
    }
    return x;
}

} // namespace

double log_prob_beta(const BetaParams& params, const Vector& a) {
    const Vector x = beta_unit_position(params, a);
    double lp = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double al = params.alpha[i];
        const double be = params.beta[i];
        lp += (al - 1.0) * std::log(x[i]) + (be - 1.0) * std::log1p(-x[i]) + log_gamma(al + be) -
              log_gamma(al) - log_gamma(be) - std::log(params.action_high[i] - params.action_low[i]);
    }
    return lp;
}

BetaGradient grad_log_prob_beta(const BetaParams& params, const Vector& a) {
    const Vector x = beta_unit_position(params, a);
    BetaGradient g{Vector(x.size()), Vector(x.size())};
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double psi_sum = digamma(params.alpha[i] + params.beta[i]);
        g.alpha[i] = std::log(x[i]) - digamma(params.alpha[i]) + psi_sum;
        g.beta[i] = std::log1p(-x[i]) - digamma(params.beta[i]) + psi_sum;
    }
    return g;
}

// Sparsemax ------------------------------------------------------------------

Vector sparsemax(const SparsemaxInput& input) {
    if (!(input.temperature > 0.0)) {
        throw std::invalid_argument("sparsemax: temperature must be positive");
    }
    const auto k = input.values.size();
    if (k == 0) {
        return Vector();
    }
    Vector z = input.values / input.temperature;
    std::vector<double> sorted(z.data(), z.data() + k);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    double cumulative = 0.0;
    double support_sum = sorted[0];
    Eigen::Index support = 1;
    for (Eigen::Index i = 0; i < k; ++i) {
        cumulative += sorted[static_cast<std::size_t>(i)];
        if (1.0 + static_cast<double>(i + 1) * sorted[static_cast<std::size_t>(i)] > cumulative) {
            support = i + 1;
            support_sum = cumulative;
        }
    }
    const double threshold = (support_sum - 1.0) / static_cast<double>(support);
    return (z.array() - threshold).max(0.0).matrix();
}

Matrix cholesky_gradient(const Matrix& grad_sigma, const Matrix& chol) {
    Matrix g = (grad_sigma + grad_sigma.transpose()) * chol;
    return g.triangularView<Eigen::Lower>();
}

} // namespace qexp
