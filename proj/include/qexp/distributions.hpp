#pragma once

// Densities, log-likelihood gradients and normalizers for the Gaussian,
// squashed Gaussian, Student's t, q-Gaussian and Beta policy families, plus
// the discrete sparsemax transform.
//
// Scale matrices are carried as a lower-triangular Cholesky factor L with
// Sigma = L L^T. Gradients with respect to Sigma are returned as the full
// (unconstrained) matrix derivative; cholesky_gradient() chains them to L.

#include <Eigen/Dense>

#include "qexp/deformed_math.hpp"

namespace qexp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Location and scale of a loc-scale family member.
class LocScaleParams {
public:
    LocScaleParams() = default;
    /// Throws std::invalid_argument unless scale_chol is square lower
    /// triangular with a strictly positive diagonal matching mu.
    LocScaleParams(Vector mu, Matrix scale_chol);

    static LocScaleParams diagonal(Vector mu, const Vector& sigma);
    static LocScaleParams from_covariance(Vector mu, const Matrix& sigma);

    const Vector& mu() const { return mu_; }
    const Matrix& scale_chol() const { return chol_; }
    Eigen::Index dim() const { return mu_.size(); }
    bool is_diagonal() const { return diagonal_; }

    Matrix covariance() const;
    Matrix precision() const;
    double log_det_sigma() const;
    /// L^{-1} (a - mu).
    Vector whiten(const Vector& a) const;
    /// (a - mu)^T Sigma^{-1} (a - mu).
    double mahalanobis_sq(const Vector& a) const;
    /// Sigma^{-1} (a - mu).
    Vector precision_times_residual(const Vector& a) const;

private:
    Vector mu_;
    Matrix chol_;
    bool diagonal_ = false;
};

struct StudentTParams {
    LocScaleParams loc_scale;
    double nu = 1.0;
};

struct QGaussianParams {
    LocScaleParams loc_scale;
    EntropicIndex q{0.0};
};

/// Product of per-dimension Beta densities, affinely rescaled to
/// (action_low, action_high).
struct BetaParams {
    Vector alpha;
    Vector beta;
    Vector action_low;
    Vector action_high;

    Eigen::Index dim() const { return alpha.size(); }
    void validate() const;
};

struct SparsemaxInput {
    Vector values;
    double temperature = 1.0;
};

struct LocScaleGradient {
    Vector mu;
    Matrix sigma;
};

struct StudentTGradient {
    Vector mu;
    Matrix sigma;
    double nu = 0.0;
};

struct BetaGradient {
    Vector alpha;
    Vector beta;
};

/// Floor inside the tanh log-Jacobian.
inline constexpr double kSquashEpsilon = 1e-6;

double log_prob_gaussian(const LocScaleParams& params, const Vector& a);
LocScaleGradient grad_log_prob_gaussian(const LocScaleParams& params, const Vector& a);

/// Density of a = tanh(u), u ~ N(mu, Sigma). Throws std::domain_error if any
/// |a_i| >= 1.
double log_prob_squashed_gaussian(const LocScaleParams& params, const Vector& a);
LocScaleGradient grad_log_prob_squashed_gaussian(const LocScaleParams& params, const Vector& a);

double log_prob_student_t(const StudentTParams& params, const Vector& a);
StudentTGradient grad_log_prob_student_t(const StudentTParams& params, const Vector& a);

/// -infinity outside the support of a light-tailed q-Gaussian.
double log_prob_q_gaussian(const QGaussianParams& params, const Vector& a);
/// Throws std::domain_error when a is on or outside the light-tailed support.
LocScaleGradient grad_log_prob_q_gaussian(const QGaussianParams& params, const Vector& a);

/// Throws std::domain_error for a on or outside the bounds.
double log_prob_beta(const BetaParams& params, const Vector& a);
BetaGradient grad_log_prob_beta(const BetaParams& params, const Vector& a);

/// Log of the q-Gaussian normalizer for Sigma = I in N dimensions, so that the
/// density is exp_q(-m/2) / (|Sigma|^{1/2} exp(log_partition)).
double log_partition_q_gaussian(EntropicIndex q, int dim);

/// Normalizer of exp_q(-|a - mu|^2 / (2 sigma^2)) in N dimensions. Throws
/// std::domain_error at q >= 3 or where the heavy tail is not integrable
/// (1/(q-1) <= N/2).
double partition_q_gaussian(double sigma, EntropicIndex q, int dim);

/// (a - mu)^T Sigma^{-1} (a - mu) < 2/(1-q) for light tails; always true for q >= 1.
bool support_contains(const QGaussianParams& params, const Vector& a);

/// Euclidean projection of values/temperature onto the probability simplex.
Vector sparsemax(const SparsemaxInput& input);

/// Chains dlogp/dSigma to the lower-triangular factor: tril((G + G^T) L).
Matrix cholesky_gradient(const Matrix& grad_sigma, const Matrix& chol);

} // namespace qexp
