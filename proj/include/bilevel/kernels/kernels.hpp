#pragma once

// Dense row kernels used by the simplex pivot.
//
// Every kernel has a scalar reference implementation and, where the CPU
// supports it, an AVX2 (x86-64) or NEON (AArch64) variant. The variant is
// chosen once at startup from CPUID and can be overridden with the
// BILEVEL_ISA environment variable ("scalar", "avx2", "neon") or force_isa().
//
// axpy and divide are element-wise and never fuse multiply-add, so every
// variant produces bit-identical results and pivoting sequences do not depend
// on the host. dot reorders the summation and agrees only to rounding.

#include <cstddef>
#include <span>

namespace bilevel::kernels {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);

/// Best variant the running CPU supports.
Isa detected_isa();

/// Variant currently routed to by the dispatching entry points.
Isa active_isa();

bool isa_supported(Isa isa);

/// Throws bilevel::Error if the variant is not supported on this host.
void force_isa(Isa isa);

/// y[i] += a * x[i]
void axpy(std::span<double> y, double a, std::span<const double> x);

/// y[i] /= d
void divide(std::span<double> y, double d);

double dot(std::span<const double> a, std::span<const double> b);

namespace scalar {
void axpy(double* y, double a, const double* x, std::size_t n);
void divide(double* y, double d, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void axpy(double* y, double a, const double* x, std::size_t n);
void divide(double* y, double d, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void axpy(double* y, double a, const double* x, std::size_t n);
void divide(double* y, double d, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
}  // namespace neon
#endif

}  // namespace bilevel::kernels
