#include <cstring>
#include <vector>

#include "bilevel/common/rng.hpp"
#include "bilevel/kernels/kernels.hpp"
#include "bilevel/lp/lp.hpp"
#include "doctest.h"
#include "support/solver_oracles.hpp"

using namespace bilevel;
namespace k = bilevel::kernels;

namespace {

struct Variant {
    const char* name;
    void (*axpy)(double*, double, const double*, std::size_t);
    void (*divide)(double*, double, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
};

std::vector<Variant> simd_variants() {
    std::vector<Variant> v;
#if defined(__x86_64__) || defined(_M_X64)
    if (k::isa_supported(k::Isa::Avx2)) v.push_back({"avx2", &k::avx2::axpy, &k::avx2::divide, &k::avx2::dot});
#endif
#if defined(__aarch64__)
    v.push_back({"neon", &k::neon::axpy, &k::neon::divide, &k::neon::dot});
#endif
    return v;
}

std::vector<double> random_vec(Rng& r, std::size_t n) {
    std::vector<double> v(n);
    for (auto& e : v) e = r.uniform(-1e3, 1e3) * (r.bernoulli(0.1) ? 1e-9 : 1.0);
    return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("simd axpy and divide are bit-identical to scalar") {
    Rng rng(3);
    for (const auto& var : simd_variants()) {
        CAPTURE(var.name);
        for (std::size_t n = 0; n <= 67; ++n) {
            const auto x = random_vec(rng, n);
            const auto y0 = random_vec(rng, n);
            const double a = rng.uniform(-7, 7);
            auto ys = y0, yv = y0;
            k::scalar::axpy(ys.data(), a, x.data(), n);
            var.axpy(yv.data(), a, x.data(), n);
            CHECK(bit_equal(ys, yv));

            const double d = rng.uniform(0.1, 9) * (rng.bernoulli(0.5) ? -1 : 1);
            auto zs = y0, zv = y0;
            k::scalar::divide(zs.data(), d, n);
            var.divide(zv.data(), d, n);
            CHECK(bit_equal(zs, zv));
        }
    }
}

TEST_CASE("simd dot agrees with scalar to rounding") {
    Rng rng(4);
    for (const auto& var : simd_variants()) {
        CAPTURE(var.name);
        for (std::size_t n = 0; n <= 67; ++n) {
            const auto a = random_vec(rng, n);
            const auto b = random_vec(rng, n);
            double mag = 0.0;
            for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
            CHECK(std::abs(k::scalar::dot(a.data(), b.data(), n) - var.dot(a.data(), b.data(), n)) <=
                  1e-14 * std::max(1.0, mag));
        }
    }
}

TEST_CASE("dispatch can be forced and restored") {
    const k::Isa before = k::active_isa();
    k::force_isa(k::Isa::Scalar);
    CHECK(k::active_isa() == k::Isa::Scalar);
    std::vector<double> y{1, 2, 3}, x{1, 1, 1};
    k::axpy(y, 2.0, x);
    CHECK(y == std::vector<double>{3, 4, 5});
    k::force_isa(before);
    CHECK(k::active_isa() == before);
    if (!k::isa_supported(k::Isa::Neon)) CHECK_THROWS(k::force_isa(k::Isa::Neon));
}

TEST_CASE("simplex takes the same pivots under every kernel variant") {
    const k::Isa before = k::active_isa();
    Rng rng(8);
    for (int t = 0; t < 30; ++t) {
        const auto p = testing::random_lp(rng, 12, 9);
        k::force_isa(k::Isa::Scalar);
        const auto a = solve_lp(p);
        k::force_isa(k::detected_isa());
        const auto b = solve_lp(p);
        CHECK(a.status == b.status);
        CHECK(a.iterations == b.iterations);
        if (a.status == LpStatus::Optimal) CHECK(std::abs(a.objective - b.objective) <= 1e-9);
    }
    k::force_isa(before);
}

}
