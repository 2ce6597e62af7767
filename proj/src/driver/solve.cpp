#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "bilevel/common/error.hpp"
#include "bilevel/common/matrix.hpp"
#include "bilevel/common/tolerances.hpp"
#include "bilevel/driver/driver.hpp"

namespace bilevel {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

constexpr double kNoValue = std::numeric_limits<double>::infinity();

// HPR with the lower rows; x first, then y.
void add_hpr(ModelBuilder& b, const BilevelInstance& inst, std::vector<std::size_t>& xv,
             std::vector<std::size_t>& yv) {
    for (std::size_t k = 0; k < inst.n_x; ++k) xv.push_back(b.add_binary(inst.c_u[k]));
    for (std::size_t j = 0; j < inst.n_y; ++j)
        yv.push_back(b.add_var(inst.y_lower(j), inst.y_upper(j), inst.d_u[j], inst.y_is_binary(j)));
    auto block = [&](const Matrix& A, const Matrix& B, const std::vector<double>& h) {
        for (std::size_t i = 0; i < h.size(); ++i) {
            std::vector<Term> t;
            for (std::size_t k = 0; k < inst.n_x; ++k)
                if (A(i, k) != 0.0) t.emplace_back(xv[k], A(i, k));
            for (std::size_t j = 0; j < inst.n_y; ++j)
                if (B(i, j) != 0.0) t.emplace_back(yv[j], B(i, j));
            b.add_row(std::move(t), RowSense::Le, h[i]);
        }
    };
    block(inst.A_u, inst.B_u, inst.h_u);
    block(inst.A_l, inst.B_l, inst.h_l);
    b.add_group("x", xv.front(), inst.n_x);
    b.add_group("y", yv.front(), inst.n_y);
}

double upper_objective(const BilevelInstance& inst, std::span<const std::uint8_t> x, std::span<const double> y) {
    double s = dot(inst.d_u, y);
    for (std::size_t k = 0; k < inst.n_x; ++k)
        if (x[k]) s += inst.c_u[k];
    return s;
}

void guard_structure(const BilevelInstance& inst, PhiCache& cache, ModularityKind kind, const char* what) {
    const auto verdict = check_modularity(ValueOracle::from_phi(inst, cache));
    if (!verdict.available)
        throw AssumptionViolation(std::string(what) + " needs phi defined at every tender");
    if (!verdict.holds(kind))
        throw AssumptionViolation(std::string(what) + " needs a " + to_string(kind) +
                                  "modular phi; the check failed (use assert_structure to skip it)");
}

NeuralRule obtain_rule(const BilevelInstance& inst, const DriverConfig& cfg, PhiCache& cache) {
    if (cfg.learned.rule) return *cfg.learned.rule;
    auto samples = sample_training_data(inst, cfg.learned.samples, cfg.seed, &cache);
    return train_rule(samples, inst.n_x, inst.n_b(), cfg.learned.train).rule;
}

CutRow to_row(const BilevelInstance& inst, const Cut& c, std::size_t num_vars, const std::vector<std::size_t>& xv,
              const std::vector<std::size_t>& yv) {
    CutRow r;
    r.coeffs.assign(num_vars, 0.0);
    for (std::size_t k = 0; k < inst.n_x; ++k) r.coeffs[xv[k]] = -c.alpha[k];
    for (std::size_t j = 0; j < inst.n_y; ++j) r.coeffs[yv[j]] = inst.d_l[j];
    r.sense = RowSense::Ge;
    r.rhs = c.beta;
    return r;
}

CutRecord record_of(const Cut& c, double violation) {
    CutRecord r;
    r.z = c.z;
    r.family = c.family;
    r.alpha = c.alpha;
    r.beta = c.beta;
    r.violation = violation;
    r.provenance = c.provenance;
    return r;
}

void fill_solution(BilevelSolution& sol, const BilevelInstance& inst, const MilpOutcome& out,
                   const std::vector<std::size_t>& xv, const std::vector<std::size_t>& yv) {
    sol.nodes = out.nodes;
    sol.callback_rounds = out.callback_rounds;
    switch (out.status) {
        case MilpStatus::Optimal: sol.status = BilevelStatus::Optimal; break;
        case MilpStatus::Infeasible: sol.status = BilevelStatus::Infeasible; break;
        case MilpStatus::Unbounded: throw AssumptionViolation("high-point relaxation is unbounded");
        default: sol.status = BilevelStatus::Limit; break;
    }
    sol.bound = out.bound;
    sol.has_solution = out.has_incumbent;
    if (!out.has_incumbent) {
        sol.objective = kNoValue;
        sol.gap = sol.status == BilevelStatus::Infeasible ? 0.0 : kNoValue;
        return;
    }
    std::vector<double> xs(inst.n_x);
    for (std::size_t k = 0; k < inst.n_x; ++k) xs[k] = out.x[xv[k]];
    sol.x = to_binary(xs, Tolerances::integrality);
    sol.y.resize(inst.n_y);
    for (std::size_t j = 0; j < inst.n_y; ++j) {
        double v = out.x[yv[j]];
        if (inst.y_is_binary(j)) v = std::round(v);
        sol.y[j] = v;
    }
    sol.objective = out.objective;
    sol.gap = sol.status == BilevelStatus::Optimal ? 0.0 : relative_gap(sol.objective, sol.bound);
}

}  // namespace

std::optional<FixedXSolution> solve_fixed_x(const BilevelInstance& inst, std::span<const std::uint8_t> x,
                                            PhiCache& cache) {
    if (x.size() != inst.n_x) throw MalformedProblem("tender has wrong length");
    const PhiValue phi = cache.phi(x);
    if (!phi) return std::nullopt;
    ModelBuilder b(Sense::Minimize);
    std::vector<std::size_t> yv;
    for (std::size_t j = 0; j < inst.n_y; ++j)
        yv.push_back(b.add_var(inst.y_lower(j), inst.y_upper(j), inst.d_u[j], inst.y_is_binary(j)));
    auto block = [&](const Matrix& A, const Matrix& B, const std::vector<double>& h) {
        for (std::size_t i = 0; i < h.size(); ++i) {
            double rhs = h[i];
            for (std::size_t k = 0; k < inst.n_x; ++k)
                if (x[k]) rhs -= A(i, k);
            std::vector<Term> t;
            for (std::size_t j = 0; j < inst.n_y; ++j)
                if (B(i, j) != 0.0) t.emplace_back(yv[j], B(i, j));
            b.add_row(std::move(t), RowSense::Le, rhs);
        }
    };
    block(inst.A_u, inst.B_u, inst.h_u);
    block(inst.A_l, inst.B_l, inst.h_l);
    std::vector<Term> opt;
    for (std::size_t j = 0; j < inst.n_y; ++j)
        if (inst.d_l[j] != 0.0) opt.emplace_back(yv[j], inst.d_l[j]);
    auto out = [&] {
        ModelBuilder exact = b;
        exact.add_row(opt, RowSense::Ge, *phi);
        return solve_milp(exact.build());
    }();
    if (out.status == MilpStatus::Infeasible) {
        // phi itself is attained, so an infeasible exact row may be round-off; retry with the LP slack.
        b.add_row(opt, RowSense::Ge, *phi - tol::scaled(Tolerances::feasibility, *phi));
        out = solve_milp(b.build());
    }
    if (out.status == MilpStatus::Infeasible) return std::nullopt;
    if (out.status != MilpStatus::Optimal) throw NumericalTrouble("fixed-tender problem did not solve to optimality");
    FixedXSolution s;
    s.y = out.x;
    for (std::size_t j = 0; j < inst.n_y; ++j)
        if (inst.y_is_binary(j)) s.y[j] = std::round(s.y[j]);
    s.objective = upper_objective(inst, x, s.y);
    return s;
}

BilevelSolution brute_force_solve(const BilevelInstance& inst) {
    PhiCache cache(inst);
    return brute_force_solve(inst, cache);
}

BilevelSolution brute_force_solve(const BilevelInstance& inst, PhiCache& cache) {
    inst.validate();
    if (inst.n_x > kBruteForceMaxTenders)
        throw CapacityExceeded("brute force needs n_x <= 14, got " + std::to_string(inst.n_x));
    const auto t0 = Clock::now();
    const std::size_t phi0 = cache.phi_solves();
    BilevelSolution sol;
    sol.strategy = "brute_force";
    sol.status = BilevelStatus::Infeasible;
    sol.objective = kNoValue;
    for_each_vertex(inst.n_x, [&](const BinaryVector& x) {
        auto s = solve_fixed_x(inst, x, cache);
        if (!s) return;
        // Strict improvement keeps the first optimal tender in mask order.
        if (!sol.has_solution || s->objective < sol.objective) {
            sol.has_solution = true;
            sol.x = x;
            sol.y = s->y;
            sol.objective = s->objective;
        }
    });
    if (sol.has_solution) {
        sol.status = BilevelStatus::Optimal;
        sol.bound = sol.objective;
    } else {
        sol.bound = kNoValue;
    }
    sol.gap = 0.0;
    sol.phi_solves = cache.phi_solves() - phi0;
    sol.solve_ms = sol.wall_ms = ms_since(t0);
    return sol;
}

BilevelSolution solve_bilevel(const BilevelInstance& inst, const Strategy& strategy, const DriverConfig& cfg) {
    PhiCache cache(inst);
    return solve_bilevel(inst, strategy, cfg, cache);
}

BilevelSolution solve_bilevel(const BilevelInstance& inst, const Strategy& strategy, const DriverConfig& cfg,
                              PhiCache& cache) {
    const auto t0 = Clock::now();
    inst.validate();
    strategy.validate(inst);
    const std::size_t n = inst.n_x;
    const std::size_t phi0 = cache.phi_solves(), varphi0 = cache.varphi_solves();

    BilevelSolution sol;
    sol.strategy = strategy.name();
    const auto kind = strategy.kind.value_or(ModularityKind::Sub);

    CoefficientSet cs;
    if (!strategy.learned_replace && strategy.uses_coefficients()) {
        switch (strategy.coeffs) {
            case CoeffMode::Exact: cs = exact_coefficients(inst, cache, DomainPolicy::Restrict); break;
            case CoeffMode::Quick: cs = quick_coefficients(inst, &cache, cfg.quick); break;
            case CoeffMode::ClosedForm:
                if (!cfg.assert_structure) guard_structure(inst, cache, kind, "closed-form coefficients");
                cs = closed_form_UL(ValueOracle::from_phi(inst, cache), kind);
                break;
        }
    }
    if (!strategy.learned_replace && !cfg.assert_structure) {
        if (strategy.family == CutFamily::Submodular)
            guard_structure(inst, cache, ModularityKind::Sub, "the submodular cut");
        if (strategy.family == CutFamily::Supermodular)
            guard_structure(inst, cache, ModularityKind::Super, "the supermodular cut");
    }
    const auto aug = augmented_multipliers(cs);

    ModelBuilder b(Sense::Minimize);
    std::vector<std::size_t> xv, yv;
    add_hpr(b, inst, xv, yv);
    std::optional<NeuralRule> rule;
    if (strategy.learned_replace || strategy.learned_augment) {
        rule = obtain_rule(inst, cfg, cache);
        learned_cut(inst, *rule, b, xv, yv, cfg.learned.cut);
        // The network's switches follow from x, so settle x first.
        for (auto j : xv) b.set_priority(j, 1);
    }
    const MilpProblem problem = b.build();
    sol.coeff_ms = ms_since(t0);
    const auto t1 = Clock::now();

    if (strategy.learned_replace) {
        const auto out = solve_milp(problem, {}, cfg.limits);
        fill_solution(sol, inst, out, xv, yv);
        if (sol.has_solution) {
            // The relaxation gives a bound; fixing its tender and re-solving gives a feasible point.
            sol.bound = out.status == MilpStatus::Optimal ? out.objective : out.bound;
            const double rhs = learned_cut_rhs(inst, *rule, sol.x, cfg.learned.cut);
            const PhiValue phi = cache.phi(sol.x);
            sol.learned_valid = phi && rhs <= *phi + cfg.optimality_tol;
            auto fixed = solve_fixed_x(inst, sol.x, cache);
            if (fixed) {
                sol.y = fixed->y;
                sol.objective = fixed->objective;
                sol.gap = relative_gap(sol.objective, sol.bound);
                sol.status = sol.gap <= Tolerances::equality ? BilevelStatus::Optimal : BilevelStatus::Limit;
            } else {
                sol.has_solution = false;
                sol.y.clear();
                sol.objective = kNoValue;
                sol.gap = kNoValue;
                sol.status = BilevelStatus::Limit;
            }
        }
        sol.phi_solves = cache.phi_solves() - phi0;
        sol.varphi_solves = cache.varphi_solves() - varphi0;
        sol.solve_ms = ms_since(t1);
        sol.wall_ms = ms_since(t0);
        return sol;
    }

    const auto phi_oracle = ValueOracle::from_phi(inst, cache);
    std::set<BinaryVector> anchored;

    auto make_cut = [&](const BinaryVector& z, double phi) -> Cut {
        switch (strategy.family) {
            case CutFamily::Penalty: return penalty_cut(z, cs.rho_hat, phi);
            case CutFamily::Lagrangian: return lagrangian_cut(z, cs.U, cs.L, phi);
            case CutFamily::Augmented: return augmented_cut(z, aug.first, aug.second, cs.rho_hat, phi);
            case CutFamily::Submodular: return submodular_cut(phi_oracle, z);
            case CutFamily::Supermodular: return supermodular_cut(phi_oracle, z);
            case CutFamily::QuasiLagrangian: return quasi_lagrangian_cut(inst, z, cache, kind).value();
            case CutFamily::QuasiSubmodular: return quasi_submodular_cut(inst, z, cache).value();
            case CutFamily::QuasiSupermodular: return quasi_supermodular_cut(inst, z, cache).value();
            case CutFamily::Ldr: break;
        }
        throw MalformedProblem("no cut for this family");
    };

    LazyCallback cb = [&](std::span<const double> v, double) -> LazyCutDecision {
        std::vector<double> xs(n), ys(inst.n_y);
        for (std::size_t k = 0; k < n; ++k) xs[k] = v[xv[k]];
        for (std::size_t j = 0; j < inst.n_y; ++j) ys[j] = v[yv[j]];
        const BinaryVector xh = to_binary(xs, Tolerances::integrality);
        const LowerSolution low = cache.lower(xh);
        if (!low.value) throw NumericalTrouble("candidate tender " + to_string(xh) + " has no feasible follower");
        const double phi = *low.value;
        const double dly = lower_objective(inst, ys);
        if (dly >= phi - cfg.optimality_tol) return LazyCutDecision::Accept();

        std::vector<CutRow> rows;
        std::vector<CutRecord> recs;
        const Cut c = make_cut(xh, phi);
        rows.push_back(to_row(inst, c, problem.num_vars(), xv, yv));
        recs.push_back(record_of(c, c.rhs(xh) - dly));
        if (strategy.ldr) {
            LdrOptions lo;
            lo.mode = cfg.ldr_mode;
            lo.y1_hat = low.y1(inst);
            lo.mask = cfg.ldr_mask;
            const auto res = ldr_separate(inst, xh, ys, lo);
            if (res.cut) {
                rows.push_back(to_row(inst, *res.cut, problem.num_vars(), xv, yv));
                recs.push_back(record_of(*res.cut, res.cut->rhs(xh) - dly));
            }
        }
        bool separates = false;
        for (const auto& r : rows)
            if (r.violation(v) > Tolerances::cut_violation) separates = true;
        if (!separates) {
            if (phi - dly <= 2.0 * cfg.optimality_tol) return LazyCutDecision::Accept();
            std::ostringstream os;
            os.precision(17);
            os << "cut loop stalled at x=" << to_string(xh) << ": d_l'y=" << dly << " phi=" << phi
               << " cut rhs=" << c.rhs(xh) << (anchored.count(xh) ? " (anchor already cut)" : "");
            throw NumericalTrouble(os.str());
        }
        anchored.insert(xh);
        for (auto& r : recs) sol.cuts.push_back(std::move(r));
        return LazyCutDecision::Reject(std::move(rows));
    };

    const auto out = solve_milp(problem, cb, cfg.limits);
    fill_solution(sol, inst, out, xv, yv);
    sol.phi_solves = cache.phi_solves() - phi0;
    sol.varphi_solves = cache.varphi_solves() - varphi0;
    sol.solve_ms = ms_since(t1);
    sol.wall_ms = ms_since(t0);
    return sol;
}

}  // namespace bilevel
