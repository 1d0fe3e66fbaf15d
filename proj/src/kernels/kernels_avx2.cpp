#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace qexp::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four output rows per pass so each x load feeds four FMAs.
void gemv_avx2(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
               std::size_t cols) {
    std::size_t r = 0;
    for (; r + 4 <= rows; r += 4) {
        const double* w0 = w + r * cols;
        const double* w1 = w0 + cols;
        const double* w2 = w1 + cols;
        const double* w3 = w2 + cols;
        __m256d a0 = _mm256_setzero_pd();
        __m256d a1 = _mm256_setzero_pd();
        __m256d a2 = _mm256_setzero_pd();
        __m256d a3 = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            const __m256d xv = _mm256_loadu_pd(x + c);
            a0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + c), xv, a0);
            a1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + c), xv, a1);
            a2 = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + c), xv, a2);
            a3 = _mm256_fmadd_pd(_mm256_loadu_pd(w3 + c), xv, a3);
        }
        double s0 = hsum(a0);
        double s1 = hsum(a1);
        double s2 = hsum(a2);
        double s3 = hsum(a3);
        for (; c < cols; ++c) {
            s0 += w0[c] * x[c];
            s1 += w1[c] * x[c];
            s2 += w2[c] * x[c];
            s3 += w3[c] * x[c];
        }
        y[r] = bias[r] + s0;
        y[r + 1] = bias[r + 1] + s1;
        y[r + 2] = bias[r + 2] + s2;
        y[r + 3] = bias[r + 3] + s3;
    }
    for (; r < rows; ++r) {
        y[r] = bias[r] + dot_avx2(w + r * cols, x, cols);
    }
}

void lerp_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const double keep = 1.0 - alpha;
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vk = _mm256_set1_pd(keep);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d yv = _mm256_mul_pd(vk, _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), yv));
    }
    for (; i < n; ++i) y[i] = keep * y[i] + alpha * x[i];
}

void adam_avx2(double* param, const double* grad, double* m, double* v, std::size_t n,
               const AdamCoefficients& c) {
    const double step = c.learning_rate / c.bias_correction1;
    const double inv_c2 = 1.0 / c.bias_correction2;
    const __m256d b1 = _mm256_set1_pd(c.beta1);
    const __m256d b1c = _mm256_set1_pd(1.0 - c.beta1);
    const __m256d b2 = _mm256_set1_pd(c.beta2);
    const __m256d b2c = _mm256_set1_pd(1.0 - c.beta2);
    const __m256d vstep = _mm256_set1_pd(step);
    const __m256d vinv = _mm256_set1_pd(inv_c2);
    const __m256d veps = _mm256_set1_pd(c.epsilon);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(b1c, g));
        __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                   _mm256_mul_pd(_mm256_mul_pd(b2c, g), g));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, vinv)), veps);
        const __m256d upd = _mm256_div_pd(_mm256_mul_pd(vstep, mv), denom);
        _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
        param[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + c.epsilon);
    }
}

} // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{Backend::Avx2, "avx2",    dot_avx2, axpy_avx2,
                                   gemv_avx2,     lerp_avx2, adam_avx2};
    return table;
}

} // namespace qexp::kernels::detail
