#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace qexp::kernels {

const KernelTable* avx2_kernels() {
#if defined(QEXP_HAVE_AVX2_KERNELS)
    return &detail::avx2_table();
#else
    return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(QEXP_HAVE_NEON_KERNELS)
    return &detail::neon_table();
#else
    return nullptr;
#endif
}

bool backend_available(Backend backend) {
    switch (backend) {
    case Backend::Scalar:
        return true;
    case Backend::Avx2:
#if defined(QEXP_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Backend::Neon:
        return neon_kernels() != nullptr;
    }
    return false;
}

std::string_view backend_name(Backend backend) {
    switch (backend) {
    case Backend::Scalar:
        return "scalar";
    case Backend::Avx2:
        return "avx2";
    case Backend::Neon:
        return "neon";
    }
    return "unknown";
}

namespace {

const KernelTable& table_for(Backend backend) {
    switch (backend) {
    case Backend::Avx2:
        return *avx2_kernels();
    case Backend::Neon:
        return *neon_kernels();
    case Backend::Scalar:
        break;
    }
    return scalar_kernels();
}

const KernelTable* choose_default() {
    if (const char* forced = std::getenv("QEXP_SIMD")) {
        const std::string name(forced);
        for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
            if (name == backend_name(b) && backend_available(b)) {
                return &table_for(b);
            }
        }
    }
    for (Backend b : {Backend::Avx2, Backend::Neon}) {
        if (backend_available(b)) {
            return &table_for(b);
        }
    }
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{choose_default()};
    return slot;
}

} // namespace

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void set_active(Backend backend) {
    if (!backend_available(backend)) {
        throw std::invalid_argument("kernel backend not available on this machine");
    }
    active_slot().store(&table_for(backend), std::memory_order_release);
}

} // namespace qexp::kernels
