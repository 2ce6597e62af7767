#include <atomic>
#include <cstdlib>
#include <string>

#include "bilevel/common/error.hpp"
#include "bilevel/kernels/kernels.hpp"

namespace bilevel::kernels {

namespace {

struct Table {
    void (*axpy)(double*, double, const double*, std::size_t);
    void (*divide)(double*, double, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
};

constexpr Table kScalar{&scalar::axpy, &scalar::divide, &scalar::dot};
#if defined(__x86_64__) || defined(_M_X64)
constexpr Table kAvx2{&avx2::axpy, &avx2::divide, &avx2::dot};
#endif
#if defined(__aarch64__)
constexpr Table kNeon{&neon::axpy, &neon::divide, &neon::dot};
#endif

const Table& table_for(Isa isa) {
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::Avx2:
            return kAvx2;
#endif
#if defined(__aarch64__)
        case Isa::Neon:
            return kNeon;
#endif
        default:
            return kScalar;
    }
}

Isa isa_from_env(Isa fallback) {
    const char* env = std::getenv("BILEVEL_ISA");
    if (env == nullptr) return fallback;
    const std::string v(env);
    Isa wanted = fallback;
    if (v == "scalar") wanted = Isa::Scalar;
    else if (v == "avx2") wanted = Isa::Avx2;
    else if (v == "neon") wanted = Isa::Neon;
    return isa_supported(wanted) ? wanted : fallback;
}

struct State {
    std::atomic<Isa> isa;
    State() : isa(isa_from_env(detected_isa())) {}
};

State& state() {
    static State s;
    return s;
}

const Table& active() { return table_for(state().isa.load(std::memory_order_relaxed)); }

}  // namespace

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa detected_isa() {
    if (isa_supported(Isa::Avx2)) return Isa::Avx2;
    if (isa_supported(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

Isa active_isa() { return state().isa.load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
    if (!isa_supported(isa)) throw Error(std::string("kernel variant not supported here: ") + isa_name(isa));
    state().isa.store(isa, std::memory_order_relaxed);
}

void axpy(std::span<double> y, double a, std::span<const double> x) {
    active().axpy(y.data(), a, x.data(), y.size());
}

void divide(std::span<double> y, double d) { active().divide(y.data(), d, y.size()); }

double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

}  // namespace bilevel::kernels
