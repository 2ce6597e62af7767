#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "bilevel/common/error.hpp"

namespace bilevel {

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) throw MalformedProblem("lattice operation on vectors of different length");
}
}  // namespace detail

/// Elementwise maximum.
template <class T>
std::vector<T> lattice_join(std::span<const T> a, std::span<const T> b) {
    detail::require_same_length(a.size(), b.size());
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::max(a[i], b[i]);
    return out;
}

/// Elementwise minimum.
template <class T>
std::vector<T> lattice_meet(std::span<const T> a, std::span<const T> b) {
    detail::require_same_length(a.size(), b.size());
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::min(a[i], b[i]);
    return out;
}

template <class T>
std::vector<T> lattice_join(const std::vector<T>& a, const std::vector<T>& b) {
    return lattice_join(std::span<const T>(a), std::span<const T>(b));
}

template <class T>
std::vector<T> lattice_meet(const std::vector<T>& a, const std::vector<T>& b) {
    return lattice_meet(std::span<const T>(a), std::span<const T>(b));
}

inline double pos_part(double v) { return std::max(v, 0.0); }
inline double neg_part(double v) { return std::min(v, 0.0); }

inline std::vector<double> pos_part(std::span<const double> v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double e) { return pos_part(e); });
    return out;
}

inline std::vector<double> neg_part(std::span<const double> v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double e) { return neg_part(e); });
    return out;
}

}  // namespace bilevel
