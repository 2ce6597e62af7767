#pragma once

// Independent reference solvers used only by tests: they share no code with
// the simplex or the branch-and-bound beyond the problem types.

#include <optional>
#include <vector>

#include "bilevel/common/rng.hpp"
#include "bilevel/lp/lp.hpp"
#include "bilevel/milp/milp.hpp"

namespace bilevel::testing {

/// Best objective over all basic solutions of a bounded LP with Le/Ge rows
/// and finite variable bounds. nullopt when no vertex is feasible.
std::optional<double> lp_by_vertices(const LpProblem& p);

/// Enumerates the integer variables (binary only) and solves the remaining
/// continuous LP by vertex enumeration (or directly if none are continuous).
std::optional<double> milp_by_enumeration(const MilpProblem& p);

/// Random box-bounded maximization LP with Le/Ge rows, `n` vars, `m` rows.
LpProblem random_lp(Rng& rng, std::size_t n, std::size_t m, bool with_ge = true);

/// Random max problem over binaries (plus `cont` continuous in [0,1]).
MilpProblem random_milp(Rng& rng, std::size_t bins, std::size_t cont, std::size_t m);

/// Objective of the dual of `p` built from the reported row duals, with the
/// reduced costs recomputed from scratch.
double dual_objective(const LpProblem& p, const std::vector<double>& duals);

}  // namespace bilevel::testing
