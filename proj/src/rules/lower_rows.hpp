#pragma once

#include <cmath>
#include <vector>

#include "bilevel/common/matrix.hpp"
#include "bilevel/model/instance.hpp"

namespace bilevel::detail {

// Lower-level rows split by block: A x + B1 y1 + B2 y2 <= h, with finite
// bounds of the continuous block appended as rows (+y2_j <= hi, -y2_j <= -lo).
struct LowerRows {
    Matrix A, B1, B2;
    std::vector<double> h;
    std::vector<double> d1, d2;

    std::size_t rows() const { return h.size(); }
};

inline LowerRows split_lower(const BilevelInstance& inst) {
    const std::size_t nb = inst.n_b(), nc = inst.n_c();
    std::size_t extra = 0;
    for (const auto& [lo, hi] : inst.y2_bounds) extra += std::isfinite(lo) + std::isfinite(hi);
    const std::size_t m = inst.m_l() + extra;
    LowerRows r{Matrix(m, inst.n_x), Matrix(m, nb), Matrix(m, nc), std::vector<double>(m, 0.0), {}, {}};
    for (std::size_t k = 0; k < nb; ++k) r.d1.push_back(inst.d_l[inst.binary_y[k]]);
    for (std::size_t k = 0; k < nc; ++k) r.d2.push_back(inst.d_l[inst.continuous_y[k]]);
    for (std::size_t i = 0; i < inst.m_l(); ++i) {
        for (std::size_t k = 0; k < inst.n_x; ++k) r.A(i, k) = inst.A_l(i, k);
        for (std::size_t k = 0; k < nb; ++k) r.B1(i, k) = inst.B_l(i, inst.binary_y[k]);
        for (std::size_t k = 0; k < nc; ++k) r.B2(i, k) = inst.B_l(i, inst.continuous_y[k]);
        r.h[i] = inst.h_l[i];
    }
    std::size_t row = inst.m_l();
    for (std::size_t k = 0; k < nc; ++k) {
        const auto [lo, hi] = inst.y2_bounds[k];
        if (std::isfinite(hi)) {
            r.B2(row, k) = 1.0;
            r.h[row++] = hi;
        }
        if (std::isfinite(lo)) {
            r.B2(row, k) = -1.0;
            r.h[row++] = -lo;
        }
    }
    return r;
}

}  // namespace bilevel::detail
