#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bilevel/cuts/cut.hpp"
#include "bilevel/cuts/lagrangian.hpp"
#include "bilevel/model/value_function.hpp"

namespace bilevel {

/// Set-function view of a value function on {0,1}^n.
class ValueOracle {
public:
    using Fn = std::function<PhiValue(std::span<const std::uint8_t>)>;

    ValueOracle(std::size_t n, Fn fn);

    /// x -> phi(x)
    static ValueOracle from_phi(const BilevelInstance& inst, PhiCache& cache);
    /// x -> varphi(x, y1), the residual continuous value with y1 fixed.
    static ValueOracle from_varphi(const BilevelInstance& inst, PhiCache& cache, BinaryVector y1);
    /// table[mask] with bit i of mask = x_i.
    static ValueOracle from_table(std::size_t n, std::vector<double> table);

    std::size_t n() const { return n_; }

    /// Throws AssumptionViolation where the value is undefined.
    double operator()(std::span<const std::uint8_t> x) const;
    PhiValue try_eval(std::span<const std::uint8_t> x) const;

    /// Evaluations so far, including repeats.
    std::size_t calls() const { return *calls_; }
    void reset_calls() const { *calls_ = 0; }

private:
    std::size_t n_;
    Fn fn_;
    std::shared_ptr<std::atomic<std::size_t>> calls_;
};

enum class ModularityKind { Sub, Super };

const char* to_string(ModularityKind k);

struct ModularityVerdict {
    /// false when the oracle is undefined somewhere; flags are then meaningless.
    bool available = true;
    bool submodular = false;
    bool supermodular = false;
    /// (x', x'') with f(x') + f(x'') below f(x' v x'') + f(x' ^ x'') (resp. above).
    std::optional<std::pair<BinaryVector, BinaryVector>> sub_witness, super_witness;

    bool neither() const { return available && !submodular && !supermodular; }
    bool holds(ModularityKind k) const { return available && (k == ModularityKind::Sub ? submodular : supermodular); }
};

inline constexpr std::size_t kModularityMaxTenders = 14;

/// Local test: for all z and i < j with z_i = z_j = 0, compares
/// f(z+e_i) + f(z+e_j) with f(z) + f(z+e_i+e_j).
ModularityVerdict check_modularity(const ValueOracle& f);

/// Closed-form U, L and rho from 2n+2 evaluations.
///   sub:   L_i = f(0) - f(e_i),      U_i = f(1-e_i) - f(1)
///   super: L_i = f(1-e_i) - f(1),    U_i = f(0) - f(e_i)
CoefficientSet closed_form_UL(const ValueOracle& f, ModularityKind kind);

/// f(S_0) + sum_k [f(S_k) - f(S_k-1)] x_sk, S_k the first k entries of z sorted
/// descending (ties by index). Needs a submodular f.
Cut submodular_cut(const ValueOracle& f, std::span<const std::uint8_t> z);

/// f(S_z) - sum_{i in S_z} d([n]\i, i)(1 - x_i) + sum_{i not in S_z} d(S_z, i) x_i
/// with d(S, i) = f(S + i) - f(S). Needs a supermodular f.
Cut supermodular_cut(const ValueOracle& f, std::span<const std::uint8_t> z);

/// Cuts that fix the binary follower block at its optimum y1 at z and use the
/// structure of x -> varphi(x, y1). The constant d_l1'y1 is added to beta.
/// nullopt when the lower level is infeasible at z.
std::optional<Cut> quasi_lagrangian_cut(const BilevelInstance& inst, std::span<const std::uint8_t> z,
                                        PhiCache& cache, ModularityKind kind);
std::optional<Cut> quasi_submodular_cut(const BilevelInstance& inst, std::span<const std::uint8_t> z,
                                        PhiCache& cache);
std::optional<Cut> quasi_supermodular_cut(const BilevelInstance& inst, std::span<const std::uint8_t> z,
                                          PhiCache& cache);

}  // namespace bilevel
