#include <cmath>

#include "kernels_internal.hpp"

namespace qexp::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
                 std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = bias[r] + dot_scalar(w + r * cols, x, cols);
    }
}

void lerp_scalar(double alpha, const double* x, double* y, std::size_t n) {
    const double keep = 1.0 - alpha;
    for (std::size_t i = 0; i < n; ++i) y[i] = keep * y[i] + alpha * x[i];
}

void adam_scalar(double* param, const double* grad, double* m, double* v, std::size_t n,
                 const AdamCoefficients& c) {
    const double step = c.learning_rate / c.bias_correction1;
    const double inv_c2 = 1.0 / c.bias_correction2;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
        param[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + c.epsilon);
    }
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{Backend::Scalar, "scalar",    dot_scalar, axpy_scalar,
                                   gemv_scalar,     lerp_scalar, adam_scalar};
    return table;
}

} // namespace qexp::kernels
