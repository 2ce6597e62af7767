#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace bilevel {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class RowSense { Le, Eq, Ge };

/// min/max c'x  s.t.  rows[i]'x (<=,=,>=) rhs[i],  lower <= x <= upper.
struct LpProblem {
    Sense sense = Sense::Minimize;
    std::vector<double> objective;
    std::vector<std::vector<double>> rows;
    std::vector<RowSense> row_senses;
    std::vector<double> rhs;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return rows.size(); }

    /// Appends a column (zero in every existing row). Returns its index.
    std::size_t add_variable(double lo, double hi, double cost = 0.0);

    /// Appends a row; `coeffs` is padded with zeros up to num_vars().
    std::size_t add_row(std::vector<double> coeffs, RowSense s, double b);

    /// Throws MalformedProblem on inconsistent dimensions, NaN, or crossed bounds.
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

struct LpOutcome {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> primal;
    double objective = 0.0;
    /// d objective / d rhs[i], in the problem's own sense.
    std::vector<double> duals;
    /// c_j - duals' A_j per structural column, in the problem's own sense.
    std::vector<double> reduced_costs;
    std::size_t iterations = 0;
    bool bland_engaged = false;
};

struct LpOptions {
    /// Use the smallest-index rule from the first pivot (test hook).
    bool bland_from_start = false;
    /// 0 picks a generous default from the problem size.
    std::size_t max_iterations = 0;
};

LpOutcome solve_lp(const LpProblem& p, const LpOptions& opts = {});

/// Largest violation of any row or bound at `x` (0 when feasible).
double max_violation(const LpProblem& p, std::span<const double> x);

}  // namespace bilevel
