#include <algorithm>
#include <cmath>

#include "bilevel/common/error.hpp"
#include "bilevel/cuts/lagrangian.hpp"
#include "bilevel/instances/generators.hpp"
#include "bilevel/model/value_function.hpp"
#include "doctest.h"
#include "support/toy_instances.hpp"

using namespace bilevel;

namespace {

std::vector<PhiValue> phi_table(const BilevelInstance& inst, PhiCache& cache) {
    std::vector<PhiValue> t(std::size_t{1} << inst.n_x);
    for (std::uint64_t m = 0; m < t.size(); ++m) t[m] = eval_phi(inst, vertex_from_mask(m, inst.n_x), cache);
    return t;
}

// General instance with A_l scaled by 1/n_x, so y = 0 is feasible at every tender.
BilevelInstance random_general(std::size_t n_x, std::uint64_t seed) {
    GeneralGenConfig cfg;
    cfg.n_x = n_x;
    cfg.seed = seed;
    auto inst = gen_general(cfg);
    for (std::size_t i = 0; i < inst.A_l.rows(); ++i)
        for (std::size_t k = 0; k < inst.n_x; ++k) inst.A_l(i, k) /= static_cast<double>(n_x);
    return inst;
}

// Lower level that ignores x entirely.
BilevelInstance constant_phi(std::size_t n_x, std::uint64_t seed) {
    auto inst = random_general(n_x, seed);
    for (std::size_t i = 0; i < inst.A_l.rows(); ++i)
        for (std::size_t k = 0; k < inst.n_x; ++k) inst.A_l(i, k) = 0.0;
    return inst;
}

// Adds the lower row sum(x) <= cap, so tenders above it are infeasible.
BilevelInstance with_tender_cap(const BilevelInstance& base, double cap) {
    auto A = base.A_l.to_rows();
    auto B = base.B_l.to_rows();
    auto h = base.h_l;
    A.push_back(std::vector<double>(base.n_x, 1.0));
    B.push_back(std::vector<double>(base.n_y, 0.0));
    h.push_back(cap);
    return make_instance(base.c_u, base.d_u, base.A_u.to_rows(), base.B_u.to_rows(), base.h_u, base.d_l, A, B, h,
                         base.binary_y, base.y2_bounds);
}

struct Families {
    Cut penalty, lagrangian, augmented;
};

Families all_cuts(const BinaryVector& z, const CoefficientSet& cs, double phi_z) {
    const auto [Ua, La] = augmented_multipliers(cs);
    return {penalty_cut(z, cs.rho_hat, phi_z), lagrangian_cut(z, cs.U, cs.L, phi_z),
            augmented_cut(z, Ua, La, cs.rho_hat, phi_z)};
}

}  // namespace

TEST_SUITE("cuts") {

TEST_CASE("exact coefficients on the small examples") {
    {
        const auto inst = testing::toy_t1();
        PhiCache cache(inst);
        const auto cs = exact_coefficients(inst, cache);
        CHECK(cs.rho_hat == doctest::Approx(1));
        CHECK(cs.U[0] == doctest::Approx(1));
        CHECK(cs.L[0] == doctest::Approx(1));
        CHECK(cs.provenance == CoeffProvenance::Exact);
        CHECK(exact_rho(inst, cache) == doctest::Approx(1));
    }
    {
        const auto inst = constant_phi(4, 11);
        PhiCache cache(inst);
        const auto cs = exact_UL(inst, cache);
        CHECK(cs.rho_hat == doctest::Approx(0));
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(cs.U[i] == doctest::Approx(0));
            CHECK(cs.L[i] == doctest::Approx(0));
        }
    }
    {
        const auto inst = testing::coverage_toy();
        PhiCache cache(inst);
        const auto cs = exact_coefficients(inst, cache);
        CHECK(cs.rho_hat == doctest::Approx(1));
        CHECK(cs.U[0] == doctest::Approx(0));
        CHECK(cs.L[0] == doctest::Approx(-1));
    }
}

TEST_CASE("exact coefficients invariants") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto inst = random_general(2 + seed % 5, seed);
        PhiCache cache(inst);
        const auto cs = exact_coefficients(inst, cache);
        double m = 0.0;
        for (std::size_t i = 0; i < inst.n_x; ++i) {
            CHECK(cs.U[i] >= cs.L[i]);
            m = std::max({m, cs.U[i], -cs.L[i]});
        }
        CHECK(cs.rho_hat == doctest::Approx(m).epsilon(1e-12));
        CHECK_FALSE(cs.restricted);
    }
}

TEST_CASE("exact enumeration refuses oversize or partial domains") {
    CHECK_THROWS_AS(
        [] {
            const auto inst = random_general(21, 3);
            PhiCache cache(inst);
            exact_rho(inst, cache);
        }(),
        CapacityExceeded);
    const auto inst = with_tender_cap(random_general(4, 5), 2.0);
    PhiCache cache(inst);
    CHECK_THROWS_AS(exact_rho(inst, cache), AssumptionViolation);
    const auto cs = exact_coefficients(inst, cache, DomainPolicy::Restrict);
    CHECK(cs.restricted);
}

TEST_CASE("quick coefficients on the small examples") {
    {
        const auto inst = testing::toy_t1();
        const auto cs = quick_coefficients(inst);
        CHECK(cs.rho_hat == doctest::Approx(1));
        CHECK(cs.U[0] == doctest::Approx(1));
        // y is free in [0, 1 - x], so the min pairs y = 0 with y' = 0
        CHECK(cs.L[0] == doctest::Approx(0));
        CHECK(quick_rho(inst) == doctest::Approx(1));
        CHECK(cs.provenance == CoeffProvenance::Quick);
    }
    {
        // Lower problem independent of x: max - min of d_l'y on both sides.
        const auto inst = constant_phi(3, 7);
        const auto cs = quick_UL(inst);
        ModelBuilder hi(Sense::Maximize), lo(Sense::Minimize);
        for (auto* b : {&hi, &lo}) {
            std::vector<std::size_t> x(inst.n_x);
            for (auto& v : x) v = b->add_binary();
            add_lower_block(*b, inst, x, 1.0);
        }
        const double range = solve_milp(hi.build()).objective - solve_milp(lo.build()).objective;
        CHECK(cs.rho_hat == doctest::Approx(range));
        for (std::size_t i = 0; i < inst.n_x; ++i) {
            CHECK(cs.U[i] == doctest::Approx(range));
            CHECK(cs.L[i] == doctest::Approx(-range));
            CHECK(cs.U[i] >= 0.0);
            CHECK(cs.L[i] <= 0.0);
        }
    }
}

TEST_CASE("quick coefficients relax the exact ones") {
    for (std::uint64_t seed = 100; seed < 150; ++seed) {
        const std::size_t n = 2 + seed % 7;  // up to 8
        const auto inst = random_general(n, seed);
        PhiCache cache(inst);
        const auto ex = exact_coefficients(inst, cache);
        const auto qu = quick_coefficients(inst, &cache);
        CAPTURE(seed);
        CHECK(qu.rho_hat >= ex.rho_hat - 1e-6);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(qu.L[i] <= ex.L[i] + 1e-6);
            CHECK(ex.L[i] <= ex.U[i]);
            CHECK(ex.U[i] <= qu.U[i] + 1e-6);
        }
    }
}

TEST_CASE("penalty cut examples") {
    const BinaryVector one{1}, zero{0};
    const auto c = penalty_cut(one, 1.0, 0.0);  // T1: phi(1) = 0
    CHECK(c.alpha[0] == doctest::Approx(1));
    CHECK(c.beta == doctest::Approx(-1));
    CHECK(c.rhs(BinaryVector{0}) == doctest::Approx(-1));
    CHECK(c.rhs(BinaryVector{1}) == doctest::Approx(0));
    CHECK(c.family == CutFamily::Penalty);

    const auto flat = penalty_cut(BinaryVector{0, 0, 0}, 0.0, 3.5);
    for (std::uint64_t m = 0; m < 8; ++m) CHECK(flat.rhs(vertex_from_mask(m, 3)) == doctest::Approx(3.5));

    // One tender: phi(z) - rho |x - z|.
    for (double rho : {0.5, 2.0})
        for (auto z : {zero, one})
            for (auto x : {zero, one})
                CHECK(penalty_cut(z, rho, 4.0).rhs(x) == doctest::Approx(4.0 - rho * std::abs(double(x[0]) - z[0])));
}

TEST_CASE("Lagrangian cut examples") {
    const std::vector<double> U{1.0}, L{1.0};
    const auto c = lagrangian_cut(BinaryVector{1}, U, L, 0.0);
    CHECK(c.alpha[0] == doctest::Approx(-1));
    CHECK(c.beta == doctest::Approx(1));
    CHECK(c.rhs(BinaryVector{0}) == doctest::Approx(1));  // phi(0)
    CHECK(c.rhs(BinaryVector{1}) == doctest::Approx(0));  // phi(1)

    // U = rho, L = -rho is the penalty cut.
    const BinaryVector z{1, 0, 1};
    const double rho = 1.7;
    const std::vector<double> Ur(3, rho), Lr(3, -rho);
    const auto lr = lagrangian_cut(z, Ur, Lr, 2.0);
    const auto pen = penalty_cut(z, rho, 2.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(lr.alpha[i] == doctest::Approx(pen.alpha[i]));
    CHECK(lr.beta == doctest::Approx(pen.beta));

    CHECK_THROWS_AS(lagrangian_cut(BinaryVector{1, 0}, U, L, 0.0), MalformedProblem);
}

TEST_CASE("augmented cut reductions") {
    const BinaryVector z{0, 1, 1, 0};
    const std::vector<double> U{0.3, -1.0, 2.0, 0.0}, L{-0.5, -2.0, 1.0, -4.0}, zero(4, 0.0);
    const auto a0 = augmented_cut(z, U, L, 0.0, 1.25);
    const auto lr = lagrangian_cut(z, U, L, 1.25);
    const auto al = augmented_cut(z, zero, zero, 0.8, 1.25);
    const auto pen = penalty_cut(z, 0.8, 1.25);
    for (std::uint64_t m = 0; m < 16; ++m) {
        const auto x = vertex_from_mask(m, 4);
        CHECK(a0.rhs(x) == doctest::Approx(lr.rhs(x)));
        CHECK(al.rhs(x) == doctest::Approx(pen.rhs(x)));
    }

    // T1 with shifted multipliers: same values at both tenders for any rho.
    const auto inst = testing::toy_t1();
    PhiCache cache(inst);
    auto cs = exact_coefficients(inst, cache);
    const auto phi = phi_table(inst, cache);
    for (double rho : {0.0, 1.0}) {
        cs.rho_hat = rho;
        for (std::uint64_t zm = 0; zm < 2; ++zm) {
            const auto zz = vertex_from_mask(zm, 1);
            const auto f = all_cuts(zz, cs, *phi[zm]);
            for (std::uint64_t xm = 0; xm < 2; ++xm) {
                const auto x = vertex_from_mask(xm, 1);
                CHECK(f.augmented.rhs(x) == doctest::Approx(f.lagrangian.rhs(x)));
            }
        }
    }
}

TEST_CASE("exact cuts are valid, tight, ordered and complete") {
    for (std::uint64_t seed = 200; seed < 215; ++seed) {
        const std::size_t n = 2 + seed % 5;
        const auto inst = random_general(n, seed);
        PhiCache cache(inst);
        const auto cs = exact_coefficients(inst, cache);
        const auto phi = phi_table(inst, cache);
        const std::size_t N = phi.size();
        std::vector<double> best_pen(N, -kInf), best_lr(N, -kInf), best_alr(N, -kInf);
        CAPTURE(seed);
        for (std::uint64_t zm = 0; zm < N; ++zm) {
            const auto z = vertex_from_mask(zm, n);
            const auto f = all_cuts(z, cs, *phi[zm]);
            CHECK(f.penalty.rhs(z) == doctest::Approx(*phi[zm]).epsilon(1e-9));
            CHECK(f.lagrangian.rhs(z) == doctest::Approx(*phi[zm]).epsilon(1e-9));
            CHECK(f.augmented.rhs(z) == doctest::Approx(*phi[zm]).epsilon(1e-9));
            for (std::uint64_t xm = 0; xm < N; ++xm) {
                const auto x = vertex_from_mask(xm, n);
                const double p = f.penalty.rhs(x), l = f.lagrangian.rhs(x), a = f.augmented.rhs(x);
                CHECK(p <= *phi[xm] + 1e-6);
                CHECK(l <= *phi[xm] + 1e-6);
                CHECK(a <= *phi[xm] + 1e-6);
                CHECK(l >= p - 1e-9);
                CHECK(a == doctest::Approx(l).epsilon(1e-9));
                best_pen[xm] = std::max(best_pen[xm], p);
                best_lr[xm] = std::max(best_lr[xm], l);
                best_alr[xm] = std::max(best_alr[xm], a);
            }
        }
        for (std::size_t xm = 0; xm < N; ++xm) {
            CHECK(best_pen[xm] == doctest::Approx(*phi[xm]));
            CHECK(best_lr[xm] == doctest::Approx(*phi[xm]));
            CHECK(best_alr[xm] == doctest::Approx(*phi[xm]));
        }
    }
}

TEST_CASE("quick cuts are valid and tight") {
    for (std::uint64_t seed = 300; seed < 310; ++seed) {
        const std::size_t n = 2 + seed % 4;
        const auto inst = random_general(n, seed);
        PhiCache cache(inst);
        const auto cs = quick_coefficients(inst, &cache);
        const auto phi = phi_table(inst, cache);
        for (std::uint64_t zm = 0; zm < phi.size(); ++zm) {
            const auto z = vertex_from_mask(zm, n);
            const auto f = all_cuts(z, cs, *phi[zm]);
            CHECK(f.lagrangian.rhs(z) == doctest::Approx(*phi[zm]));
            for (std::uint64_t xm = 0; xm < phi.size(); ++xm) {
                const auto x = vertex_from_mask(xm, n);
                CHECK(f.penalty.rhs(x) <= *phi[xm] + 1e-6);
                CHECK(f.lagrangian.rhs(x) <= *phi[xm] + 1e-6);
                CHECK(f.augmented.rhs(x) <= *phi[xm] + 1e-6);
            }
        }
    }
}

TEST_CASE("restricted domains keep every feasible pair valid") {
    for (std::uint64_t seed = 400; seed < 410; ++seed) {
        const std::size_t n = 3 + seed % 3;
        const auto inst = with_tender_cap(random_general(n, seed), static_cast<double>(n) - 2.0);
        PhiCache cache(inst);
        const auto phi = phi_table(inst, cache);
        QuickOptions qo;
        const std::vector<CoefficientSet> sets{exact_coefficients(inst, cache, DomainPolicy::Restrict),
                                               quick_coefficients(inst, &cache, qo)};
        for (const auto& cs : sets) {
            CHECK(cs.restricted);
            for (std::uint64_t zm = 0; zm < phi.size(); ++zm) {
                if (!phi[zm]) continue;
                const auto z = vertex_from_mask(zm, n);
                const auto f = all_cuts(z, cs, *phi[zm]);
                CHECK(f.lagrangian.rhs(z) == doctest::Approx(*phi[zm]));
                for (std::uint64_t xm = 0; xm < phi.size(); ++xm) {
                    if (!phi[xm]) continue;
                    const auto x = vertex_from_mask(xm, n);
                    CAPTURE(seed);
                    CHECK(f.penalty.rhs(x) <= *phi[xm] + 1e-6);
                    CHECK(f.lagrangian.rhs(x) <= *phi[xm] + 1e-6);
                    CHECK(f.augmented.rhs(x) <= *phi[xm] + 1e-6);
                }
            }
        }
    }
}

TEST_CASE("restricted domain beyond the enumeration check is still valid") {
    const auto inst = with_tender_cap(random_general(5, 77), 3.0);
    PhiCache cache(inst);
    QuickOptions qo;
    qo.domain_check_max = 0;  // pretend the cube is too big to check
    const auto cs = quick_coefficients(inst, &cache, qo);
    CHECK(cs.restricted);
    const auto phi = phi_table(inst, cache);
    for (std::uint64_t zm = 0; zm < phi.size(); ++zm) {
        if (!phi[zm]) continue;
        const auto f = all_cuts(vertex_from_mask(zm, 5), cs, *phi[zm]);
        for (std::uint64_t xm = 0; xm < phi.size(); ++xm)
            if (phi[xm]) CHECK(f.lagrangian.rhs(vertex_from_mask(xm, 5)) <= *phi[xm] + 1e-6);
    }
}

}  // TEST_SUITE
