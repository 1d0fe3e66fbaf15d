#include <arm_neon.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace qexp::kernels::detail {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_neon(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
               std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = bias[r] + dot_neon(w + r * cols, x, cols);
    }
}

void lerp_neon(double alpha, const double* x, double* y, std::size_t n) {
    const double keep = 1.0 - alpha;
    const float64x2_t va = vdupq_n_f64(alpha);
    const float64x2_t vk = vdupq_n_f64(keep);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vmulq_f64(vk, vld1q_f64(y + i)), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] = keep * y[i] + alpha * x[i];
}

void adam_neon(double* param, const double* grad, double* m, double* v, std::size_t n,
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

const KernelTable& neon_table() {
    static const KernelTable table{Backend::Neon, "neon",    dot_neon, axpy_neon,
                                   gemv_neon,     lerp_neon, adam_neon};
    return table;
}

} // namespace qexp::kernels::detail
