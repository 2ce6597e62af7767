#include "bilevel/kernels/kernels.hpp"

namespace bilevel::kernels::scalar {

void axpy(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double prod = a * x[i];
        y[i] = y[i] + prod;
    }
}

void divide(double* y, double d, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] / d;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace bilevel::kernels::scalar
