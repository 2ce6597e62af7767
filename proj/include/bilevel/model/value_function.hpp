#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "bilevel/common/binary.hpp"
#include "bilevel/milp/milp.hpp"
#include "bilevel/model/instance.hpp"

namespace bilevel {

/// nullopt marks an infeasible lower level.
using PhiValue = std::optional<double>;

struct LowerSolution {
    PhiValue value;
    std::vector<double> y;  // full lower-level vector, empty when infeasible

    /// Binary block of y (entries listed in binary_y), rounded.
    BinaryVector y1(const BilevelInstance& inst) const;
};

/// Lower level at fixed x as a maximization MILP over y.
MilpProblem build_lower(const BilevelInstance& inst, std::span<const std::uint8_t> x);

/// Solves the lower level at x. Throws AssumptionViolation if unbounded.
LowerSolution solve_lower(const BilevelInstance& inst, std::span<const std::uint8_t> x);

/// Continuous residual LP value with the binary block fixed to y1.
PhiValue solve_varphi(const BilevelInstance& inst, std::span<const std::uint8_t> x,
                      std::span<const std::uint8_t> y1);

/// Memoizes lower-level values per tender, and residual values per (x, y1).
/// Reads share a lock; inserts take it exclusively. Evaluation happens
/// outside the lock, so concurrent misses on the same key may both solve.
class PhiCache {
public:
    explicit PhiCache(const BilevelInstance& inst) : inst_(inst) {}

    const BilevelInstance& instance() const { return inst_; }

    PhiValue phi(std::span<const std::uint8_t> x);
    LowerSolution lower(std::span<const std::uint8_t> x);
    PhiValue varphi(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y1);

    /// Every phi()/lower() call, cached or not.
    std::size_t phi_lookups() const { return phi_lookups_; }
    /// Lower-level MILPs actually solved.
    std::size_t phi_solves() const { return phi_solves_; }
    std::size_t varphi_lookups() const { return varphi_lookups_; }
    std::size_t varphi_solves() const { return varphi_solves_; }
    void reset_counters();

private:
    const BilevelInstance& inst_;
    mutable std::shared_mutex mu_;
    std::unordered_map<BinaryVector, LowerSolution, BinaryVectorHash> phi_;
    std::unordered_map<BinaryVector, PhiValue, BinaryVectorHash> varphi_;
    std::atomic<std::size_t> phi_lookups_{0}, phi_solves_{0}, varphi_lookups_{0}, varphi_solves_{0};
};

PhiValue eval_phi(const BilevelInstance& inst, std::span<const std::uint8_t> x, PhiCache& cache);
PhiValue eval_varphi(const BilevelInstance& inst, std::span<const std::uint8_t> x,
                     std::span<const std::uint8_t> y1_fixed, PhiCache& cache);

/// Multilinear extension of phi at z in [0,1]^n_x. Needs n_x <= 15 and a
/// feasible lower level at every vertex.
double eval_psi(const BilevelInstance& inst, std::span<const double> z, PhiCache& cache);

/// True when the lower level is feasible at every binary x (n_x <= 20).
bool lower_feasible_everywhere(PhiCache& cache);

/// min c_u'x + d_u'y over upper and lower constraints, without follower
/// optimality. Groups "x" and "y" address the two blocks.
MilpProblem build_hpr(const BilevelInstance& inst);

/// d_l'y for a full y vector.
double lower_objective(const BilevelInstance& inst, std::span<const double> y);

}  // namespace bilevel

namespace bilevel {

/// Adds a copy of the lower-level variables and rows B_l y + A_l x <= h_l to
/// `b`, with `x_vars` holding the builder indices of the tender. Each y gets
/// objective coefficient `weight * d_l`. Returns the new y indices.
std::vector<std::size_t> add_lower_block(ModelBuilder& b, const BilevelInstance& inst,
                                         const std::vector<std::size_t>& x_vars, double weight);

}  // namespace bilevel
