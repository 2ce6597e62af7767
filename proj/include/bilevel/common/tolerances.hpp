#pragma once

#include <algorithm>
#include <cmath>

namespace bilevel {

// Every epsilon in the library is read from here.
struct Tolerances {
    static constexpr double feasibility = 1e-7;
    static constexpr double optimality = 1e-7;  // reduced-cost threshold
    static constexpr double integrality = 1e-6;
    static constexpr double cut_violation = 1e-6;
    static constexpr double equality = 1e-9;
    static constexpr double pivot = 1e-9;
    static constexpr double milp_absolute_gap = 1e-7;
};

namespace tol {

/// `a <= b` up to an absolute slack.
inline bool leq(double a, double b, double eps) { return a <= b + eps; }

inline bool geq(double a, double b, double eps) { return a + eps >= b; }

inline bool near(double a, double b, double eps) { return std::abs(a - b) <= eps; }

/// Slack scaled by the magnitude of the operands, never below `eps`.
inline double scaled(double eps, double a, double b = 0.0) {
    return eps * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool is_integral(double v, double eps = Tolerances::integrality) {
    return std::abs(v - std::round(v)) <= eps;
}

}  // namespace tol
}  // namespace bilevel
