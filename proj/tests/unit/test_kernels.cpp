#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qexp/kernels.hpp"
#include "qexp/samplers.hpp"

using namespace qexp;
using kernels::Backend;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

std::vector<const kernels::KernelTable*> vector_tables() {
    std::vector<const kernels::KernelTable*> out;
    if (kernels::backend_available(Backend::Avx2)) out.push_back(kernels::avx2_kernels());
    if (kernels::backend_available(Backend::Neon)) out.push_back(kernels::neon_kernels());
    return out;
}

// Lengths straddle every unroll width and remainder path.
const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 67, 130};

} // namespace

TEST(Kernels, ScalarReference) {
    const auto& k = kernels::scalar_kernels();
    const double a[] = {1, 2, 3};
    const double b[] = {4, 5, 6};
    EXPECT_DOUBLE_EQ(k.dot(a, b, 3), 32.0);
    double y[] = {1, 1, 1};
    k.axpy(2.0, a, y, 3);
    EXPECT_DOUBLE_EQ(y[2], 7.0);
    const double w[] = {1, 0, 0, 1, 2, 3};
    const double bias[] = {0.5, -1.0};
    double out[2];
    k.gemv(w, bias, a, out, 2, 3);
    EXPECT_DOUBLE_EQ(out[0], 1.5);
    EXPECT_DOUBLE_EQ(out[1], 13.0);
    double t[] = {0.0, 10.0};
    const double src[] = {1.0, 0.0};
    k.lerp(0.25, src, t, 2);
    EXPECT_DOUBLE_EQ(t[0], 0.25);
    EXPECT_DOUBLE_EQ(t[1], 7.5);
}

TEST(Kernels, VectorVariantsMatchScalar) {
    const auto& ref = kernels::scalar_kernels();
    Rng rng(3);
    for (const auto* table : vector_tables()) {
        for (std::size_t n : kLengths) {
            const auto a = random_vector(n, rng);
            const auto b = random_vector(n, rng);
            EXPECT_NEAR(table->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), 1e-12) << n;

            auto y1 = random_vector(n, rng);
            auto y2 = y1;
            table->axpy(0.7, a.data(), y1.data(), n);
            ref.axpy(0.7, a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14);

            auto l1 = b;
            auto l2 = b;
            table->lerp(0.01, a.data(), l1.data(), n);
            ref.lerp(0.01, a.data(), l2.data(), n);
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(l1[i], l2[i], 1e-15);

            for (std::size_t rows : {1u, 3u, 4u, 5u, 9u}) {
                const auto w = random_vector(rows * n, rng);
                const auto bias = random_vector(rows, rng);
                std::vector<double> o1(rows), o2(rows);
                table->gemv(w.data(), bias.data(), a.data(), o1.data(), rows, n);
                ref.gemv(w.data(), bias.data(), a.data(), o2.data(), rows, n);
                for (std::size_t r = 0; r < rows; ++r) EXPECT_NEAR(o1[r], o2[r], 1e-12);
            }

            auto p1 = random_vector(n, rng);
            auto p2 = p1;
            auto m1 = random_vector(n, rng);
            auto m2 = m1;
            std::vector<double> v1(n), v2(n);
            for (std::size_t i = 0; i < n; ++i) v1[i] = v2[i] = std::abs(a[i]);
            const kernels::AdamCoefficients c{1e-3, 0.9, 0.999, 1e-8, 1.0 - 0.9 * 0.9, 1.0 - 0.999 * 0.999};
            table->adam(p1.data(), b.data(), m1.data(), v1.data(), n, c);
            ref.adam(p2.data(), b.data(), m2.data(), v2.data(), n, c);
            for (std::size_t i = 0; i < n; ++i) {
                EXPECT_NEAR(p1[i], p2[i], 1e-14);
                EXPECT_NEAR(m1[i], m2[i], 1e-15);
                EXPECT_NEAR(v1[i], v2[i], 1e-15);
            }
        }
    }
}

TEST(Kernels, BackendSelection) {
    EXPECT_TRUE(kernels::backend_available(Backend::Scalar));
    const auto original = kernels::active().backend;
    kernels::set_active(Backend::Scalar);
    EXPECT_EQ(kernels::active().backend, Backend::Scalar);
    kernels::set_active(original);
    EXPECT_EQ(kernels::active().backend, original);
    for (Backend b : {Backend::Avx2, Backend::Neon}) {
        if (!kernels::backend_available(b)) {
            EXPECT_THROW(kernels::set_active(b), std::invalid_argument);
        }
    }
}
