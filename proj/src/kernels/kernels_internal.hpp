#pragma once

#include "qexp/kernels.hpp"

namespace qexp::kernels::detail {

#if defined(QEXP_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table();
#endif
#if defined(QEXP_HAVE_NEON_KERNELS)
const KernelTable& neon_table();
#endif

} // namespace qexp::kernels::detail
