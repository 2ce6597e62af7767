#include "bilevel/model/value_function.hpp"

#include <cmath>
#include <mutex>

#include "bilevel/common/error.hpp"
#include "bilevel/common/tolerances.hpp"

namespace bilevel {

BinaryVector LowerSolution::y1(const BilevelInstance& inst) const {
    BinaryVector out(inst.n_b());
    for (std::size_t k = 0; k < inst.n_b(); ++k) out[k] = y[inst.binary_y[k]] > 0.5 ? 1 : 0;
    return out;
}

namespace {

void check_x(const BilevelInstance& inst, std::span<const std::uint8_t> x) {
    if (x.size() != inst.n_x) throw MalformedProblem("tender has length " + std::to_string(x.size()));
    for (auto v : x)
        if (v > 1) throw MalformedProblem("tender is not binary");
}

}  // namespace

MilpProblem build_lower(const BilevelInstance& inst, std::span<const std::uint8_t> x) {
    check_x(inst, x);
    ModelBuilder b(Sense::Maximize);
    for (std::size_t j = 0; j < inst.n_y; ++j)
        b.add_var(inst.y_lower(j), inst.y_upper(j), inst.d_l[j], inst.y_is_binary(j));
    for (std::size_t i = 0; i < inst.m_l(); ++i) {
        std::vector<Term> t;
        for (std::size_t j = 0; j < inst.n_y; ++j)
            if (inst.B_l(i, j) != 0.0) t.emplace_back(j, inst.B_l(i, j));
        double rhs = inst.h_l[i];
        for (std::size_t k = 0; k < inst.n_x; ++k) rhs -= inst.A_l(i, k) * x[k];
        b.add_row(std::move(t), RowSense::Le, rhs);
    }
    b.add_group("y", 0, inst.n_y);
    return b.build();
}

LowerSolution solve_lower(const BilevelInstance& inst, std::span<const std::uint8_t> x) {
    const MilpOutcome r = solve_milp(build_lower(inst, x));
    LowerSolution out;
    switch (r.status) {
        case MilpStatus::Optimal:
            out.value = r.objective;
            out.y = r.x;
            return out;
        case MilpStatus::Infeasible:
            return out;
        case MilpStatus::Unbounded:
            throw AssumptionViolation("lower level is unbounded at x=" + to_string(x));
        default:
            throw NumericalTrouble("lower level solve stopped early");
    }
}

PhiValue solve_varphi(const BilevelInstance& inst, std::span<const std::uint8_t> x,
                      std::span<const std::uint8_t> y1) {
    check_x(inst, x);
    if (y1.size() != inst.n_b()) throw MalformedProblem("fixed binary block has wrong length");
    LpProblem p;
    p.sense = Sense::Maximize;
    for (std::size_t k = 0; k < inst.n_c(); ++k) {
        const std::size_t j = inst.continuous_y[k];
        p.add_variable(inst.y2_bounds[k].first, inst.y2_bounds[k].second, inst.d_l[j]);
    }
    for (std::size_t i = 0; i < inst.m_l(); ++i) {
        double rhs = inst.h_l[i];
        for (std::size_t k = 0; k < inst.n_x; ++k) rhs -= inst.A_l(i, k) * x[k];
        for (std::size_t k = 0; k < inst.n_b(); ++k) rhs -= inst.B_l(i, inst.binary_y[k]) * y1[k];
        std::vector<double> row(inst.n_c());
        for (std::size_t k = 0; k < inst.n_c(); ++k) row[k] = inst.B_l(i, inst.continuous_y[k]);
        p.add_row(std::move(row), RowSense::Le, rhs);
    }
    const LpOutcome r = solve_lp(p);
    if (r.status == LpStatus::Unbounded) throw AssumptionViolation("residual lower level is unbounded");
    if (r.status == LpStatus::Infeasible) return std::nullopt;
    return r.objective;
}

LowerSolution PhiCache::lower(std::span<const std::uint8_t> x) {
    ++phi_lookups_;
    BinaryVector key(x.begin(), x.end());
    {
        std::shared_lock lock(mu_);
        if (auto it = phi_.find(key); it != phi_.end()) return it->second;
    }
    LowerSolution s = solve_lower(inst_, x);
    ++phi_solves_;
    std::unique_lock lock(mu_);
    return phi_.emplace(std::move(key), std::move(s)).first->second;
}

PhiValue PhiCache::phi(std::span<const std::uint8_t> x) { return lower(x).value; }

PhiValue PhiCache::varphi(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y1) {
    ++varphi_lookups_;
    BinaryVector key(x.begin(), x.end());
    key.insert(key.end(), y1.begin(), y1.end());
    {
        std::shared_lock lock(mu_);
        if (auto it = varphi_.find(key); it != varphi_.end()) return it->second;
    }
    PhiValue v = solve_varphi(inst_, x, y1);
    ++varphi_solves_;
    std::unique_lock lock(mu_);
    return varphi_.emplace(std::move(key), v).first->second;
}

void PhiCache::reset_counters() {
    phi_lookups_ = 0;
    phi_solves_ = 0;
    varphi_lookups_ = 0;
    varphi_solves_ = 0;
}

PhiValue eval_phi(const BilevelInstance& inst, std::span<const std::uint8_t> x, PhiCache& cache) {
    if (&inst != &cache.instance()) throw Error("cache belongs to a different instance");
    return cache.phi(x);
}

PhiValue eval_varphi(const BilevelInstance& inst, std::span<const std::uint8_t> x,
                     std::span<const std::uint8_t> y1_fixed, PhiCache& cache) {
    if (&inst != &cache.instance()) throw Error("cache belongs to a different instance");
    return cache.varphi(x, y1_fixed);
}

double eval_psi(const BilevelInstance& inst, std::span<const double> z, PhiCache& cache) {
    if (z.size() != inst.n_x) throw MalformedProblem("point has wrong length");
    if (inst.n_x > 15) throw CapacityExceeded("multilinear extension limited to 15 tenders");
    for (double v : z)
        if (v < 0.0 || v > 1.0) throw MalformedProblem("point outside the unit cube");
    double total = 0.0;
    for_each_vertex(inst.n_x, [&](const BinaryVector& x) {
        const PhiValue v = eval_phi(inst, x, cache);
        if (!v) throw AssumptionViolation("lower level infeasible at vertex " + to_string(x));
        double w = 1.0;
        for (std::size_t i = 0; i < inst.n_x && w != 0.0; ++i) w *= x[i] ? z[i] : 1.0 - z[i];
        total += w * *v;
    });
    return total;
}

bool lower_feasible_everywhere(PhiCache& cache) {
    const std::size_t n = cache.instance().n_x;
    if (n > 20) throw CapacityExceeded("feasibility enumeration limited to 20 tenders");
    bool all = true;
    for_each_vertex(n, [&](const BinaryVector& x) {
        if (all && !cache.phi(x)) all = false;
    });
    return all;
}

MilpProblem build_hpr(const BilevelInstance& inst) {
    inst.validate();
    ModelBuilder b(Sense::Minimize);
    for (std::size_t k = 0; k < inst.n_x; ++k) b.add_binary(inst.c_u[k]);
    for (std::size_t j = 0; j < inst.n_y; ++j)
        b.add_var(inst.y_lower(j), inst.y_upper(j), inst.d_u[j], inst.y_is_binary(j));
    auto add_block = [&](const Matrix& A, const Matrix& B, const std::vector<double>& h) {
        for (std::size_t i = 0; i < h.size(); ++i) {
            std::vector<Term> t;
            for (std::size_t k = 0; k < inst.n_x; ++k)
                if (A(i, k) != 0.0) t.emplace_back(k, A(i, k));
            for (std::size_t j = 0; j < inst.n_y; ++j)
                if (B(i, j) != 0.0) t.emplace_back(inst.n_x + j, B(i, j));
            b.add_row(std::move(t), RowSense::Le, h[i]);
        }
    };
    add_block(inst.A_u, inst.B_u, inst.h_u);
    add_block(inst.A_l, inst.B_l, inst.h_l);
    b.add_group("x", 0, inst.n_x);
    b.add_group("y", inst.n_x, inst.n_y);
    return b.build();
}

double lower_objective(const BilevelInstance& inst, std::span<const double> y) {
    return dot(inst.d_l, y);
}

}  // namespace bilevel

namespace bilevel {

std::vector<std::size_t> add_lower_block(ModelBuilder& b, const BilevelInstance& inst,
                                         const std::vector<std::size_t>& x_vars, double weight) {
    if (x_vars.size() != inst.n_x) throw MalformedProblem("tender index list has wrong length");
    std::vector<std::size_t> y(inst.n_y);
    for (std::size_t j = 0; j < inst.n_y; ++j)
        y[j] = b.add_var(inst.y_lower(j), inst.y_upper(j), weight * inst.d_l[j], inst.y_is_binary(j));
    for (std::size_t i = 0; i < inst.m_l(); ++i) {
        std::vector<Term> t;
        for (std::size_t k = 0; k < inst.n_x; ++k)
            if (inst.A_l(i, k) != 0.0) t.emplace_back(x_vars[k], inst.A_l(i, k));
        for (std::size_t j = 0; j < inst.n_y; ++j)
            if (inst.B_l(i, j) != 0.0) t.emplace_back(y[j], inst.B_l(i, j));
        b.add_row(std::move(t), RowSense::Le, inst.h_l[i]);
    }
    return y;
}

}  // namespace bilevel
