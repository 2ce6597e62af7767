#include "bilevel/cuts/lagrangian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "bilevel/common/error.hpp"

namespace bilevel {

const char* to_string(CoeffProvenance p) {
    switch (p) {
        case CoeffProvenance::Exact: return "exact";
        case CoeffProvenance::Quick: return "quick";
        case CoeffProvenance::ClosedFormSub: return "closed_form_sub";
        case CoeffProvenance::ClosedFormSuper: return "closed_form_super";
    }
    return "?";
}

namespace {

// Smallest t >= 0 such that widening U by +t and L by -t makes the
// Lagrangian cut valid between every pair of feasible tenders.
double widening_for_pairs(const std::vector<PhiValue>& phi, std::size_t n, const std::vector<double>& U,
                          const std::vector<double>& L) {
    const std::uint64_t count = std::uint64_t{1} << n;
    double t = 0.0;
    for (std::uint64_t z = 0; z < count; ++z) {
        if (!phi[z]) continue;
        for (std::uint64_t x = 0; x < count; ++x) {
            if (x == z || !phi[x]) continue;
            const std::uint64_t diff = x ^ z;
            const int d = std::popcount(diff);
            if (d < 2) continue;
            double rhs = *phi[z];
            for (std::size_t i = 0; i < n; ++i) {
                if (!((diff >> i) & 1U)) continue;
                if ((z >> i) & 1U) rhs += L[i];
                else rhs -= U[i];
            }
            t = std::max(t, (rhs - *phi[x]) / d);
        }
    }
    return t;
}

}  // namespace

CoefficientSet exact_coefficients(const BilevelInstance& inst, PhiCache& cache, DomainPolicy policy) {
    const std::size_t n = inst.n_x;
    if (n > kExactMaxTenders) throw CapacityExceeded("exact coefficients limited to 20 tenders");
    const std::uint64_t count = std::uint64_t{1} << n;
    std::vector<PhiValue> phi(count);
    bool full = true;
    for (std::uint64_t m = 0; m < count; ++m) {
        phi[m] = eval_phi(inst, vertex_from_mask(m, n), cache);
        if (!phi[m]) full = false;
    }
    if (!full && policy == DomainPolicy::Refuse)
        throw AssumptionViolation("lower level infeasible at some tender; exact coefficients need every tender");
    if (!full && n > kRestrictedMaxTenders)
        throw CapacityExceeded("restricted exact coefficients limited to 12 tenders");

    CoefficientSet cs;
    cs.provenance = CoeffProvenance::Exact;
    cs.restricted = !full;
    cs.U.assign(n, 0.0);
    cs.L.assign(n, 0.0);
    cs.usable.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << i;
        double hi = -kInf, lo = kInf;
        for (std::uint64_t m = 0; m < count; ++m) {
            if (m & bit) continue;
            if (!phi[m] || !phi[m | bit]) continue;
            const double d = *phi[m] - *phi[m | bit];
            hi = std::max(hi, d);
            lo = std::min(lo, d);
        }
        if (hi > -kInf) {
            cs.U[i] = hi;
            cs.L[i] = lo;
            cs.usable[i] = true;
        }
    }

    if (full) {
        for (std::size_t i = 0; i < n; ++i) cs.rho_hat = std::max({cs.rho_hat, cs.U[i], -cs.L[i]});
        return cs;
    }

    // Over a partial domain, neighbours no longer chain: take every pair.
    for (std::uint64_t z = 0; z < count; ++z) {
        if (!phi[z]) continue;
        for (std::uint64_t x = 0; x < count; ++x) {
            if (x == z || !phi[x]) continue;
            cs.rho_hat = std::max(cs.rho_hat, (*phi[z] - *phi[x]) / std::popcount(x ^ z));
        }
    }
    cs.widened_by = widening_for_pairs(phi, n, cs.U, cs.L);
    for (std::size_t i = 0; i < n; ++i) {
        cs.U[i] += cs.widened_by;
        cs.L[i] -= cs.widened_by;
    }
    return cs;
}

double exact_rho(const BilevelInstance& inst, PhiCache& cache, DomainPolicy policy) {
    return exact_coefficients(inst, cache, policy).rho_hat;
}

CoefficientSet exact_UL(const BilevelInstance& inst, PhiCache& cache, DomainPolicy policy) {
    return exact_coefficients(inst, cache, policy);
}

namespace {

bool domain_known_full(const BilevelInstance& inst, PhiCache* cache, const QuickOptions& opts) {
    if (inst.n_x > opts.domain_check_max) return false;
    if (cache) return lower_feasible_everywhere(*cache);
    PhiCache local(inst);
    return lower_feasible_everywhere(local);
}

// A relaxed bound on the optimum: the solver's bound when a limit stopped it.
std::optional<double> milp_value(const MilpOutcome& r) {
    switch (r.status) {
        case MilpStatus::Optimal: return r.objective;
        case MilpStatus::NodeLimit:
        case MilpStatus::TimeLimit: return std::isfinite(r.bound) ? std::optional<double>(r.bound) : std::nullopt;
        case MilpStatus::Infeasible: return std::nullopt;
        case MilpStatus::Unbounded: throw AssumptionViolation("coefficient problem unbounded; lower level unbounded");
    }
    return std::nullopt;
}

// max d_l'y - min d_l'y' over all lower-feasible (x, y).
double lower_range(const BilevelInstance& inst, const QuickOptions& opts) {
    double ends[2];
    for (int k = 0; k < 2; ++k) {
        ModelBuilder b(k == 0 ? Sense::Maximize : Sense::Minimize);
        std::vector<std::size_t> x(inst.n_x);
        for (auto& v : x) v = b.add_binary();
        add_lower_block(b, inst, x, 1.0);
        const auto v = milp_value(solve_milp(b.build(), {}, opts.limits));
        if (!v) return 0.0;
        ends[k] = *v;
    }
    return std::max(0.0, ends[0] - ends[1]);
}

}  // namespace

double quick_rho(const BilevelInstance& inst, PhiCache* cache, const QuickOptions& opts) {
    return quick_coefficients(inst, cache, opts).rho_hat;
}

CoefficientSet quick_UL(const BilevelInstance& inst, PhiCache* cache, const QuickOptions& opts) {
    return quick_coefficients(inst, cache, opts);
}

CoefficientSet quick_coefficients(const BilevelInstance& inst, PhiCache* cache, const QuickOptions& opts) {
    const std::size_t n = inst.n_x;
    CoefficientSet cs;
    cs.provenance = CoeffProvenance::Quick;
    cs.U.assign(n, 0.0);
    cs.L.assign(n, 0.0);
    cs.usable.assign(n, false);

    // rho: one MILP over (z, z', gamma, y, y') with z and z' at Hamming distance 1.
    {
        ModelBuilder b(Sense::Maximize);
        std::vector<std::size_t> z(n), zp(n), g(n);
        for (auto& v : z) v = b.add_binary();
        for (auto& v : zp) v = b.add_binary();
        for (auto& v : g) v = b.add_var(0.0, 1.0);
        add_lower_block(b, inst, z, 1.0);
        add_lower_block(b, inst, zp, -1.0);
        std::vector<Term> ham;
        for (std::size_t i = 0; i < n; ++i) {
            ham.emplace_back(z[i], 1.0);
            ham.emplace_back(zp[i], 1.0);
            ham.emplace_back(g[i], -2.0);
            b.add_row({{g[i], 1.0}, {z[i], -1.0}}, RowSense::Le, 0.0);
            b.add_row({{g[i], 1.0}, {zp[i], -1.0}}, RowSense::Le, 0.0);
            b.add_row({{z[i], 1.0}, {zp[i], 1.0}, {g[i], -1.0}}, RowSense::Le, 1.0);
        }
        b.add_row(std::move(ham), RowSense::Eq, 1.0);
        const auto v = milp_value(solve_milp(b.build(), {}, opts.limits));
        if (v) cs.rho_hat = std::max(0.0, *v);
        else cs.no_pair = true;
    }

    // U_i and L_i: the two ends of d_l'y - d_l'y' with x_i = 0 for y, x_i = 1 for y'.
    for (std::size_t i = 0; i < n; ++i) {
        double ends[2] = {0.0, 0.0};
        bool ok = true;
        for (int k = 0; k < 2 && ok; ++k) {
            ModelBuilder b(k == 0 ? Sense::Maximize : Sense::Minimize);
            std::vector<std::size_t> shared(n);
            for (auto& v : shared) v = b.add_binary();
            const std::size_t off = b.add_var(0.0, 0.0, 0.0, true);
            const std::size_t on = b.add_var(1.0, 1.0, 0.0, true);
            std::vector<std::size_t> x0 = shared, x1 = shared;
            x0[i] = off;
            x1[i] = on;
            b.set_bounds(shared[i], 0.0, 0.0);  // unused copy
            add_lower_block(b, inst, x0, 1.0);
            add_lower_block(b, inst, x1, -1.0);
            const auto v = milp_value(solve_milp(b.build(), {}, opts.limits));
            if (!v) ok = false;
            else ends[k] = *v;
        }
        if (ok) {
            cs.U[i] = ends[0];
            cs.L[i] = ends[1];
            cs.usable[i] = true;
        }
    }

    if (!domain_known_full(inst, cache, opts)) {
        cs.restricted = true;
        const double range = lower_range(inst, opts);
        cs.rho_hat = std::max(cs.rho_hat, range / 2.0);
        double floor_c = kInf;
        for (std::size_t i = 0; i < n; ++i) floor_c = std::min({floor_c, cs.U[i], -cs.L[i]});
        if (n == 0) floor_c = 0.0;
        cs.widened_by = std::max(0.0, range / 2.0 - floor_c);
        for (std::size_t i = 0; i < n; ++i) {
            cs.U[i] += cs.widened_by;
            cs.L[i] -= cs.widened_by;
        }
    }
    return cs;
}

namespace {

void check_z(std::span<const std::uint8_t> z, std::size_t n) {
    if (z.size() != n) throw MalformedProblem("anchor tender has wrong length");
}

}  // namespace

Cut penalty_cut(std::span<const std::uint8_t> z, double rho_hat, double phi_z) {
    Cut c;
    c.family = CutFamily::Penalty;
    c.z.assign(z.begin(), z.end());
    c.alpha.resize(z.size());
    c.beta = phi_z;
    for (std::size_t i = 0; i < z.size(); ++i) {
        c.alpha[i] = rho_hat * (2.0 * z[i] - 1.0);
        if (z[i]) c.beta -= rho_hat;
    }
    return c;
}

Cut lagrangian_cut(std::span<const std::uint8_t> z, std::span<const double> U, std::span<const double> L,
                   double phi_z) {
    check_z(z, U.size());
    check_z(z, L.size());
    Cut c;
    c.family = CutFamily::Lagrangian;
    c.z.assign(z.begin(), z.end());
    c.alpha.resize(z.size());
    c.beta = phi_z;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double lambda = z[i] ? L[i] : U[i];
        c.alpha[i] = -lambda;
        if (z[i]) c.beta += lambda;
    }
    return c;
}

Cut augmented_cut(std::span<const std::uint8_t> z, std::span<const double> U, std::span<const double> L,
                  double rho_hat, double phi_z) {
    Cut c = lagrangian_cut(z, U, L, phi_z);
    c.family = CutFamily::Augmented;
    for (std::size_t i = 0; i < z.size(); ++i) {
        c.alpha[i] += rho_hat * (2.0 * z[i] - 1.0);
        if (z[i]) c.beta -= rho_hat;
    }
    return c;
}

std::pair<std::vector<double>, std::vector<double>> augmented_multipliers(const CoefficientSet& cs) {
    std::vector<double> U = cs.U, L = cs.L;
    for (auto& u : U) u -= cs.rho_hat;
    for (auto& l : L) l += cs.rho_hat;
    return {U, L};
}

}  // namespace bilevel
