#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bilevel/common/error.hpp"

namespace bilevel {

/// A point of {0,1}^n. Stored as bytes so it can key hash maps directly.
using BinaryVector = std::vector<std::uint8_t>;

/// Vertex with bit i of `mask` at coordinate i.
inline BinaryVector vertex_from_mask(std::uint64_t mask, std::size_t n) {
    BinaryVector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>((mask >> i) & 1U);
    return v;
}

inline std::uint64_t mask_from_vertex(std::span<const std::uint8_t> v) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i]) m |= (std::uint64_t{1} << i);
    return m;
}

inline std::vector<double> to_doubles(std::span<const std::uint8_t> v) {
    return std::vector<double>(v.begin(), v.end());
}

/// Rounds a solver value vector; throws if any entry is not within `eps` of 0/1.
BinaryVector to_binary(std::span<const double> values, double eps);

inline std::string to_string(std::span<const std::uint8_t> v) {
    std::string s;
    s.reserve(v.size());
    for (auto b : v) s.push_back(b ? '1' : '0');
    return s;
}

/// Calls fn(vertex) for every vertex of {0,1}^n in increasing mask order.
template <class Fn>
void for_each_vertex(std::size_t n, Fn&& fn) {
    if (n >= 63) throw CapacityExceeded("vertex enumeration beyond 62 dimensions");
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t m = 0; m < count; ++m) fn(vertex_from_mask(m, n));
}

struct BinaryVectorHash {
    std::size_t operator()(const BinaryVector& v) const noexcept;
};

}  // namespace bilevel
