#pragma once

#include <array>
#include <cstdint>

namespace bilevel {

/// xoshiro256** seeded through splitmix64.
///
/// The output sequence depends only on (seed, stream), never on the standard
/// library, so generated instances are reproducible across platforms. Stream
/// `k` of a seed is an independent sequence: the splitmix64 state starts at
/// `seed ^ splitmix64(k + 1)`. Generators assign one stream per coefficient
/// block, so adding a block never shifts the draws of another.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p);

    static std::uint64_t splitmix64(std::uint64_t& state);

private:
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace bilevel
