#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "bilevel/common/matrix.hpp"

namespace bilevel {

/// min  c_u'x + d_u'y
/// s.t. A_u x + B_u y <= h_u
///      x binary, y in argmax { d_l'y' : A_l x + B_l y' <= h_l, y' in Y }
/// where Y makes the entries in `binary_y` binary and bounds the rest
/// (`y2_bounds`, aligned with `continuous_y`).
struct BilevelInstance {
    std::size_t n_x = 0;
    std::size_t n_y = 0;

    std::vector<double> c_u, d_u;
    Matrix A_u, B_u;
    std::vector<double> h_u;

    std::vector<double> d_l;
    Matrix A_l, B_l;
    std::vector<double> h_l;

    std::vector<std::size_t> binary_y;      // sorted
    std::vector<std::size_t> continuous_y;  // sorted complement
    std::vector<std::pair<double, double>> y2_bounds;

    static constexpr double kDefaultY2Upper = 1e6;

    std::size_t m_u() const { return h_u.size(); }
    std::size_t m_l() const { return h_l.size(); }
    std::size_t n_b() const { return binary_y.size(); }
    std::size_t n_c() const { return continuous_y.size(); }

    double y_lower(std::size_t j) const;
    double y_upper(std::size_t j) const;
    bool y_is_binary(std::size_t j) const;

    /// Fills `continuous_y` from `binary_y` and defaults missing y2 bounds.
    void finalize_domain();

    /// Throws MalformedProblem naming the first inconsistency.
    void validate() const;
};

/// Builds an instance from dense blocks; binary_y given, everything else derived.
BilevelInstance make_instance(std::vector<double> c_u, std::vector<double> d_u,
                              std::vector<std::vector<double>> A_u, std::vector<std::vector<double>> B_u,
                              std::vector<double> h_u, std::vector<double> d_l,
                              std::vector<std::vector<double>> A_l, std::vector<std::vector<double>> B_l,
                              std::vector<double> h_l, std::vector<std::size_t> binary_y,
                              std::vector<std::pair<double, double>> y2_bounds = {});

}  // namespace bilevel
