#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bilevel/lp/lp.hpp"

namespace bilevel {

/// Contiguous named block of variables, e.g. "x" or "y".
struct VarGroup {
    std::string name;
    std::size_t begin = 0;
    std::size_t size = 0;
};

struct MilpProblem {
    LpProblem lp;
    std::vector<bool> integer;
    std::vector<VarGroup> groups;
    /// Branching priority per variable, higher first; empty means all equal.
    std::vector<int> priority;

    std::size_t num_vars() const { return lp.num_vars(); }
    const VarGroup* group(const std::string& name) const;

    /// LP checks plus: integer variables need finite bounds.
    void validate() const;
};

/// coeffs'v (sense) rhs over all variables of the problem.
struct CutRow {
    std::vector<double> coeffs;
    RowSense sense = RowSense::Ge;
    double rhs = 0.0;

    /// Amount by which `v` breaks the row (<= 0 when satisfied).
    double violation(std::span<const double> v) const;
};

struct LazyCutDecision {
    bool accept = true;
    std::vector<CutRow> cuts;

    static LazyCutDecision Accept() { return {}; }
    static LazyCutDecision Reject(std::vector<CutRow> cuts) { return {false, std::move(cuts)}; }
};

/// Called at every integer-feasible LP solution that would improve the
/// incumbent. `objective` is in the problem's own sense.
using LazyCallback = std::function<LazyCutDecision(std::span<const double> x, double objective)>;

struct MilpLimits {
    std::size_t max_nodes = 0;  // 0: unlimited
    double time_limit_s = 0.0;  // 0: unlimited
};

enum class MilpStatus { Optimal, Infeasible, Unbounded, NodeLimit, TimeLimit };

const char* to_string(MilpStatus s);

struct MilpOutcome {
    MilpStatus status = MilpStatus::Infeasible;
    bool has_incumbent = false;
    std::vector<double> x;
    double objective = 0.0;
    /// Best proven bound, in the problem's sense (a lower bound when minimizing).
    double bound = 0.0;
    /// (objective - bound) / max(1, |objective|) in minimization terms; 0 when proven.
    double gap = 0.0;
    std::size_t nodes = 0;
    std::size_t lp_solves = 0;
    std::size_t callback_rounds = 0;
    std::size_t cuts_added = 0;
    /// Set if a later cut excluded an incumbent the callback had accepted.
    bool incumbent_dropped = false;
};

MilpOutcome solve_milp(const MilpProblem& p, const LazyCallback& callback = {}, const MilpLimits& limits = {});

using Term = std::pair<std::size_t, double>;

/// Assembles a MilpProblem from sparse rows; the dense matrix is built once.
class ModelBuilder {
public:
    explicit ModelBuilder(Sense sense = Sense::Minimize) : sense_(sense) {}

    std::size_t add_var(double lo, double hi, double cost = 0.0, bool integer = false);
    std::size_t add_binary(double cost = 0.0) { return add_var(0.0, 1.0, cost, true); }
    void add_row(std::vector<Term> terms, RowSense s, double rhs);
    void set_cost(std::size_t j, double c) { cost_.at(j) = c; }
    void set_bounds(std::size_t j, double lo, double hi);
    void set_priority(std::size_t j, int priority);
    void add_group(std::string name, std::size_t begin, std::size_t size);

    std::size_t num_vars() const { return cost_.size(); }
    std::size_t num_rows() const { return rows_.size(); }

    MilpProblem build() const;

private:
    struct SparseRow {
        std::vector<Term> terms;
        RowSense sense;
        double rhs;
    };
    Sense sense_;
    std::vector<double> cost_, lo_, hi_;
    std::vector<bool> integer_;
    std::vector<int> priority_;
    std::vector<SparseRow> rows_;
    std::vector<VarGroup> groups_;
};

}  // namespace bilevel
