#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bilevel/common/binary.hpp"
#include "bilevel/cuts/cut.hpp"
#include "bilevel/cuts/lagrangian.hpp"
#include "bilevel/milp/milp.hpp"
#include "bilevel/model/instance.hpp"
#include "bilevel/model/value_function.hpp"
#include "bilevel/modularity/modularity.hpp"
#include "bilevel/rules/ldr.hpp"
#include "bilevel/rules/neural.hpp"

namespace bilevel {

enum class CoeffMode { Exact, Quick, ClosedForm };

const char* to_string(CoeffMode m);

struct Strategy {
    CutFamily family = CutFamily::Penalty;
    CoeffMode coeffs = CoeffMode::Exact;
    /// closed_form coefficients and quasi_lagrangian read this.
    std::optional<ModularityKind> kind;
    bool ldr = false;
    bool learned_augment = false;
    /// Replace the optimality constraint by the learned cut; no lazy loop.
    bool learned_replace = false;

    /// Throws MalformedProblem (inconsistent flags) or AssumptionViolation
    /// (strategy needs structure the instance lacks, e.g. quasi with n_b = 0).
    void validate(const BilevelInstance& inst) const;

    /// e.g. "lagrangian/exact", "augmented/quick+ldr", "lagrangian/closed-sub",
    /// "submodular", "quasi_lagrangian/super", "learned_replace".
    std::string name() const;
    static Strategy parse(const std::string& s);

    bool uses_coefficients() const;
};

struct LearnedConfig {
    /// Trained when absent, from `samples` draws and `train`.
    std::optional<NeuralRule> rule;
    std::size_t samples = 1000;
    TrainOptions train;
    LearnedCutOptions cut;
};

struct DriverConfig {
    MilpLimits limits;
    QuickOptions quick;
    /// Skip the modularity check behind closed-form coefficients and the
    /// submodular/supermodular families.
    bool assert_structure = false;
    Y1Mode ldr_mode = Y1Mode::Fixed;
    LdrMask ldr_mask;
    LearnedConfig learned;
    double optimality_tol = 1e-6;
    std::uint64_t seed = 0;
};

struct CutRecord {
    BinaryVector z;
    CutFamily family = CutFamily::Penalty;
    std::vector<double> alpha;
    double beta = 0.0;
    double violation = 0.0;  // at the candidate it separated
    std::string provenance;

    Cut as_cut() const;
};

enum class BilevelStatus { Optimal, Infeasible, Limit };

const char* to_string(BilevelStatus s);

struct BilevelSolution {
    BilevelStatus status = BilevelStatus::Infeasible;
    bool has_solution = false;
    std::string strategy;
    BinaryVector x;
    std::vector<double> y;
    double objective = 0.0;
    double bound = 0.0;
    double gap = 0.0;
    std::vector<CutRecord> cuts;
    std::size_t phi_solves = 0;
    std::size_t varphi_solves = 0;
    std::size_t callback_rounds = 0;
    std::size_t nodes = 0;
    double coeff_ms = 0.0;
    double solve_ms = 0.0;
    double wall_ms = 0.0;
    /// learned_replace: whether the learned cut held at x (its rhs <= phi(x)).
    std::optional<bool> learned_valid;
};

/// (objective - bound) / max(1, |objective|)
double relative_gap(double objective, double bound);

/// Lazy cut loop over the high-point relaxation. Every integer candidate whose
/// follower part is suboptimal is cut off at z = x_hat.
BilevelSolution solve_bilevel(const BilevelInstance& inst, const Strategy& strategy, const DriverConfig& cfg = {});
/// Same, sharing a caller's cache.
BilevelSolution solve_bilevel(const BilevelInstance& inst, const Strategy& strategy, const DriverConfig& cfg,
                              PhiCache& cache);

inline constexpr std::size_t kBruteForceMaxTenders = 14;

/// Best follower response for a fixed x under the upper rows; nullopt when
/// x has no feasible lower level or no optimal response fits the upper rows.
struct FixedXSolution {
    std::vector<double> y;
    double objective = 0.0;
};
std::optional<FixedXSolution> solve_fixed_x(const BilevelInstance& inst, std::span<const std::uint8_t> x,
                                            PhiCache& cache);

/// Enumerates every tender. n_x <= 14.
BilevelSolution brute_force_solve(const BilevelInstance& inst);
BilevelSolution brute_force_solve(const BilevelInstance& inst, PhiCache& cache);

struct VerifyOptions {
    double tol = 1e-6;
    /// Full enumeration up to this many tenders, sampling beyond.
    std::size_t enumerate_max = 10;
    std::size_t samples = 64;
    std::uint64_t seed = 0;
};

struct VerifyReport {
    bool ok = true;
    std::vector<std::string> failures;
    std::optional<double> phi;
    std::size_t cuts_checked = 0;
    std::size_t points_checked = 0;
};

VerifyReport verify_solution(const BilevelInstance& inst, const BilevelSolution& sol, const VerifyOptions& opts = {});
VerifyReport verify_solution(const BilevelInstance& inst, const BilevelSolution& sol, const VerifyOptions& opts,
                             PhiCache& cache);

nlohmann::json solution_to_json(const BilevelSolution& sol);
BilevelSolution solution_from_json(const nlohmann::json& j);
void save_solution(const BilevelSolution& sol, const std::string& path);
BilevelSolution load_solution(const std::string& path);

}  // namespace bilevel
