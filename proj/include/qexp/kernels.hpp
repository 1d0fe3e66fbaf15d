#pragma once

// Dense arithmetic kernels behind the neural-network layer. Every kernel has
// a scalar reference implementation; vector variants (AVX2+FMA on x86-64,
// NEON on AArch64) are compiled when available and picked at runtime.
//
// Set QEXP_SIMD=scalar (or avx2, neon) to force a backend.

#include <cstddef>
#include <string_view>

namespace qexp::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct AdamCoefficients {
    double learning_rate;
    double beta1;
    double beta2;
    double epsilon;
    double bias_correction1;  // 1 - beta1^t
    double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
    Backend backend;
    std::string_view name;
    /// sum_i a[i] b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y += alpha x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// y[r] = bias[r] + sum_c w[r * cols + c] x[c], w row-major rows x cols
    void (*gemv)(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
                 std::size_t cols);
    /// y = (1 - alpha) y + alpha x
    void (*lerp)(double alpha, const double* x, double* y, std::size_t n);
    /// Bias-corrected Adam step on n parameters.
    void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n,
                 const AdamCoefficients& c);
};

const KernelTable& scalar_kernels();
/// nullptr when the variant was not compiled in.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// True when the variant is compiled and the running CPU supports it.
bool backend_available(Backend backend);

/// The kernel table in use; chosen once from QEXP_SIMD or CPU features.
const KernelTable& active();

/// Overrides the active backend; throws std::invalid_argument when unavailable.
void set_active(Backend backend);

std::string_view backend_name(Backend backend);

} // namespace qexp::kernels
