// Compiled without global -mavx2: each function opts in through a target
// attribute so no AVX2 code leaks into inline functions shared with the
// scalar build.

#include "bilevel/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#define BILEVEL_AVX2 __attribute__((target("avx2")))

namespace bilevel::kernels::avx2 {

BILEVEL_AVX2 void axpy(double* y, double a, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        const __m256d p0 = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        const __m256d p1 = _mm256_mul_pd(va, _mm256_loadu_pd(x + i + 4));
        _mm256_storeu_pd(y + i, _mm256_add_pd(y0, p0));
        _mm256_storeu_pd(y + i + 4, _mm256_add_pd(y1, p1));
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), p));
    }
    for (; i < n; ++i) {
        const double prod = a * x[i];
        y[i] = y[i] + prod;
    }
}

BILEVEL_AVX2 void divide(double* y, double d, std::size_t n) {
    const __m256d vd = _mm256_set1_pd(d);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_div_pd(_mm256_loadu_pd(y + i), vd));
    for (; i < n; ++i) y[i] = y[i] / d;
}

BILEVEL_AVX2 double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    }
    acc0 = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc0);
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace bilevel::kernels::avx2

#endif
