#include "bilevel/common/binary.hpp"

#include <cmath>

namespace bilevel {

BinaryVector to_binary(std::span<const double> values, double eps) {
    BinaryVector out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double r = std::round(values[i]);
        if (std::abs(values[i] - r) > eps || (r != 0.0 && r != 1.0))
            throw NumericalTrouble("value " + std::to_string(values[i]) + " at index " +
                                   std::to_string(i) + " is not binary");
        out[i] = static_cast<std::uint8_t>(r);
    }
    return out;
}

std::size_t BinaryVectorHash::operator()(const BinaryVector& v) const noexcept {
    // FNV-1a
    std::size_t h = 1469598103934665603ULL;
    for (auto b : v) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace bilevel
