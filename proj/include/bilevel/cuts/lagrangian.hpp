#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bilevel/cuts/cut.hpp"
#include "bilevel/milp/milp.hpp"
#include "bilevel/model/value_function.hpp"

namespace bilevel {

enum class CoeffProvenance { Exact, Quick, ClosedFormSub, ClosedFormSuper };

const char* to_string(CoeffProvenance p);

/// Multipliers for the penalty, Lagrangian and augmented cuts.
struct CoefficientSet {
    double rho_hat = 0.0;
    std::vector<double> U, L;
    CoeffProvenance provenance = CoeffProvenance::Exact;
    /// Some tenders have an infeasible lower level; coefficients were taken
    /// over feasible pairs only and widened until every feasible pair is valid.
    bool restricted = false;
    /// Uniform amount added to U and subtracted from L for that purpose.
    double widened_by = 0.0;
    /// false where no Hamming-1 pair along coordinate i is lower-feasible.
    std::vector<bool> usable;
    /// Quick mode found no feasible Hamming-1 pair at all.
    bool no_pair = false;
};

/// How exact enumeration treats tenders with an infeasible lower level.
enum class DomainPolicy {
    Refuse,    // throw AssumptionViolation
    Restrict,  // enumerate feasible tenders only, flag and widen
};

inline constexpr std::size_t kExactMaxTenders = 20;
inline constexpr std::size_t kRestrictedMaxTenders = 12;

double exact_rho(const BilevelInstance& inst, PhiCache& cache, DomainPolicy policy = DomainPolicy::Refuse);
CoefficientSet exact_UL(const BilevelInstance& inst, PhiCache& cache, DomainPolicy policy = DomainPolicy::Refuse);
/// rho, U and L together; cheaper than the two calls above.
CoefficientSet exact_coefficients(const BilevelInstance& inst, PhiCache& cache,
                                  DomainPolicy policy = DomainPolicy::Refuse);

struct QuickOptions {
    MilpLimits limits{200000, 0.0};
    /// Check lower feasibility of every tender by enumeration up to this size;
    /// beyond it the domain is treated as possibly restricted.
    std::size_t domain_check_max = 14;
};

/// Coefficients from relaxed MILPs over pairs of tenders and lower-level copies.
/// When the feasible tender set is not known to be the whole cube, the values
/// are enlarged so that pairs at distance >= 2 stay valid.
double quick_rho(const BilevelInstance& inst, PhiCache* cache = nullptr, const QuickOptions& opts = {});
CoefficientSet quick_UL(const BilevelInstance& inst, PhiCache* cache = nullptr, const QuickOptions& opts = {});
CoefficientSet quick_coefficients(const BilevelInstance& inst, PhiCache* cache = nullptr,
                                  const QuickOptions& opts = {});

/// d_l'y >= phi(z) - rho (1'x + 1'z - 2 x'z)
Cut penalty_cut(std::span<const std::uint8_t> z, double rho_hat, double phi_z);

/// d_l'y >= phi(z) - lambda(z)'(x - z),  lambda(z) = U (1 - z) + L z
Cut lagrangian_cut(std::span<const std::uint8_t> z, std::span<const double> U, std::span<const double> L,
                   double phi_z);

/// Both terms at once. With U, L shifted by -rho/+rho this matches the
/// Lagrangian cut pointwise.
Cut augmented_cut(std::span<const std::uint8_t> z, std::span<const double> U, std::span<const double> L,
                  double rho_hat, double phi_z);

/// U - rho and L + rho.
std::pair<std::vector<double>, std::vector<double>> augmented_multipliers(const CoefficientSet& cs);

}  // namespace bilevel
