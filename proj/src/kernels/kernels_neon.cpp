#include "bilevel/kernels/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace bilevel::kernels::neon {

void axpy(double* y, double a, const double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        // vmulq + vaddq rather than vfmaq: must round like the scalar path.
        const float64x2_t p = vmulq_f64(va, vld1q_f64(x + i));
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), p));
    }
    for (; i < n; ++i) {
        const double prod = a * x[i];
        y[i] = y[i] + prod;
    }
}

void divide(double* y, double d, std::size_t n) {
    const float64x2_t vd = vdupq_n_f64(d);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vdivq_f64(vld1q_f64(y + i), vd));
    for (; i < n; ++i) y[i] = y[i] / d;
}

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace bilevel::kernels::neon

#endif
